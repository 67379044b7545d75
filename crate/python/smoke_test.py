"""Smoke test for the lockctl extension module.

Run after `pip install -e crates/py --no-build-isolation` (or with the built
library on PYTHONPATH).
"""

import collections

import lockctl


def burst(controller, action):
    """Feeds one input and takes the first enabled action until stable."""
    controller.step(action)
    taken = [action]
    while not controller.is_stable:
        nxt = controller.enabled()[0]
        controller.step(nxt)
        taken.append(nxt)
    return taken


def main():
    reqs = lockctl.requirements()
    assert len(reqs) == 53
    counts = collections.Counter(r["category"] for r in reqs)
    assert [counts[c] for c in ("safety", "causality", "operator", "liveness")] == [21, 12, 14, 6], counts
    assert len(lockctl.select("all-safety")) == 21
    assert lockctl.parse_action("EmergencyLockCommand( north , activate )") == "EmergencyLockCommand(north,activate)"
    assert lockctl.state_bound("full") == 36_028_797_018_963_968

    c = lockctl.Controller("reduced")
    assert c.is_stable and c.stable_inputs()
    taken = burst(c, "EmergencyLockCommand(north,activate)")
    assert len(taken) > 1
    assert c.params()["emergency(north)"] == "true"
    try:
        c.step("BarrierActuator(do_close)")
    except ValueError:
        pass
    else:
        raise AssertionError("an output cannot start a burst")

    s = lockctl.Session("full", seed=5, operator_rate=0.3)
    events = s.command("EmergencyLockCommand(north,activate)")
    assert sum(1 for _, kind, _ in events if kind == "output") >= 16
    assert [seq for seq, _, _ in events] == list(range(len(events)))
    s.fault("stuck_aspect(green)@barrier_light(upstream,east)")
    s.tick(2000)
    assert s.tick_count == 2000
    assert s.plant()["lights"]["barrier_light(upstream,east)"] == "green"
    assert all(line["verdict"] == "ok" for line in s.report(at_end=True))
    assert s.stats()["interlock_breaches"] == 0

    verdicts = lockctl.check("reduced", "safreq5", mutation="drop_water_guard")
    assert not verdicts[0]["holds"] and verdicts[0]["path"]
    # The counterexample is a run of the mutant and trips the trace monitor.
    c = lockctl.Controller("reduced", mutation="drop_water_guard")
    lines = []
    for i, action in enumerate(verdicts[0]["path"]):
        c.step(action)
        lines.append(f"{i} {kind_of(action)} {action}\n")
    report = lockctl.monitor("".join(lines), "safreq5", config="reduced")
    assert report[0]["verdict"] == "violated", report

    scenario = "seed 42\noperator 0.3\n10 EmergencyLockCommand(north,activate)\n500 end\n"
    assert lockctl.replay(scenario) == lockctl.replay(scenario)
    print("lockctl smoke test passed")


def kind_of(action):
    name = action.split("(", 1)[0]
    if name.endswith("Actuator"):
        return "output"
    if name.endswith("TrafficLightSensor"):
        return "read"
    return "input"


if __name__ == "__main__":
    main()
