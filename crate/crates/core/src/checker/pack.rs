//! Fixed-width bit encoding of controller states.
//!
//! Only the parameter slots that exist under the configuration are stored, so
//! the reduced plant packs its parameters into 22 bits. The handler context
//! follows: mode (2 bits), input action (9), number of responses (3), four
//! responses (3 each) and the emitted count (5).

use crate::controller::{ControllerParams, ControllerState, Mode, Position, Responses};
use crate::domain::{
    pair_index, triple_index, Action, ActionId, Alphabet, DoubleLight, LockId, PlantConfig, SingleLight,
};

pub type Packed = u128;

const MODE_BITS: u32 = 2;
const INPUT_BITS: u32 = 9;
const COUNT_BITS: u32 = 3;
const RESPONSE_BITS: u32 = 3;
const EMITTED_BITS: u32 = 5;

/// Bit layout for one configuration.
#[derive(Debug, Clone)]
pub struct Packer {
    triples: Vec<usize>,
    pairs: Vec<usize>,
    locks: Vec<usize>,
    barrier: bool,
    param_bits: u32,
    alphabet: Alphabet,
}

struct Writer {
    word: u128,
    at: u32,
}

impl Writer {
    fn put(&mut self, value: u128, bits: u32) {
        self.word |= value << self.at;
        self.at += bits;
    }
}

struct Reader {
    word: u128,
}

impl Reader {
    fn take(&mut self, bits: u32) -> usize {
        let v = (self.word & ((1u128 << bits) - 1)) as usize;
        self.word >>= bits;
        v
    }
}

impl Packer {
    pub fn new(config: &PlantConfig) -> Self {
        let triples: Vec<usize> = config.triples().map(|(l, s, o)| triple_index(l, s, o)).collect();
        let pairs: Vec<usize> = config.lock_sides().map(|(l, s)| pair_index(l, s)).collect();
        let locks: Vec<usize> = config.locks().iter().map(|l: &LockId| l.ordinal()).collect();
        let barrier = config.include_barrier();
        let barrier_bits = if barrier { 2 + 1 + 2 } else { 0 };
        let param_bits =
            barrier_bits + 4 * triples.len() as u32 + (2 + 1 + 1) * pairs.len() as u32 + locks.len() as u32;
        let alphabet = Alphabet::new(config);
        assert!(alphabet.len() <= 1 << INPUT_BITS);
        Packer {
            triples,
            pairs,
            locks,
            barrier,
            param_bits,
            alphabet,
        }
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn param_bits(&self) -> u32 {
        self.param_bits
    }

    pub fn total_bits(&self) -> u32 {
        self.param_bits + MODE_BITS + INPUT_BITS + COUNT_BITS + 4 * RESPONSE_BITS + EMITTED_BITS
    }

    pub fn pack_params(&self, p: &ControllerParams) -> Packed {
        let mut w = Writer { word: 0, at: 0 };
        if self.barrier {
            w.put(p.barrier_status.ordinal() as u128, 2);
            w.put(p.barrier_in_emergency as u128, 1);
            w.put(p.barrier_light_set[0].ordinal() as u128, 1);
            w.put(p.barrier_light_set[1].ordinal() as u128, 1);
        }
        for &t in &self.triples {
            w.put(p.gate_status[t].ordinal() as u128, 2);
            w.put(p.paddle_status[t].ordinal() as u128, 2);
        }
        for &i in &self.pairs {
            w.put(p.entering_light_set[i].ordinal() as u128, 2);
            w.put(p.leaving_light_set[i].ordinal() as u128, 1);
            w.put(p.water_equal[i] as u128, 1);
        }
        for &l in &self.locks {
            w.put(p.locks_in_emergency[l] as u128, 1);
        }
        debug_assert_eq!(w.at, self.param_bits);
        w.word
    }

    pub fn unpack_params(&self, word: Packed) -> ControllerParams {
        let mut r = Reader { word };
        let mut p = ControllerParams::initial();
        if self.barrier {
            p.barrier_status = Position::ALL[r.take(2)];
            p.barrier_in_emergency = r.take(1) == 1;
            p.barrier_light_set[0] = SingleLight::ALL[r.take(1)];
            p.barrier_light_set[1] = SingleLight::ALL[r.take(1)];
        }
        for &t in &self.triples {
            p.gate_status[t] = Position::ALL[r.take(2)];
            p.paddle_status[t] = Position::ALL[r.take(2)];
        }
        for &i in &self.pairs {
            p.entering_light_set[i] = DoubleLight::ALL[r.take(2)];
            p.leaving_light_set[i] = SingleLight::ALL[r.take(1)];
            p.water_equal[i] = r.take(1) == 1;
        }
        for &l in &self.locks {
            p.locks_in_emergency[l] = r.take(1) == 1;
        }
        p
    }

    /// Packs the handler context given the input's alphabet id.
    pub fn pack_parts(&self, params: Packed, mode: u8, input: ActionId, responses: &[u8], emitted: u8) -> Packed {
        let mut w = Writer {
            word: params,
            at: self.param_bits,
        };
        w.put(mode as u128, MODE_BITS);
        if mode != 0 {
            w.put(input.0 as u128, INPUT_BITS);
            w.put(responses.len() as u128, COUNT_BITS);
            for &r in responses {
                w.put(r as u128, RESPONSE_BITS);
            }
            w.at = self.param_bits + MODE_BITS + INPUT_BITS + COUNT_BITS + 4 * RESPONSE_BITS;
            w.put(emitted as u128, EMITTED_BITS);
        }
        w.word
    }

    pub fn pack(&self, state: &ControllerState) -> Packed {
        let params = self.pack_params(&state.params);
        let id = |a: &Action| self.alphabet.encode(a).expect("state input is in the alphabet");
        match &state.mode {
            Mode::Stable => self.pack_parts(params, 0, ActionId(0), &[], 0),
            Mode::Awaiting { input, responses } => self.pack_parts(params, 1, id(input), responses, 0),
            Mode::Emitting {
                input,
                responses,
                emitted,
            } => self.pack_parts(params, 2, id(input), responses, *emitted),
        }
    }

    pub fn params_of(&self, word: Packed) -> Packed {
        word & ((1u128 << self.param_bits) - 1)
    }

    pub fn mode_of(&self, word: Packed) -> u8 {
        ((word >> self.param_bits) & 3) as u8
    }

    /// Input id and responses of an awaiting or emitting word.
    pub fn context_of(&self, word: Packed) -> (ActionId, Responses) {
        let mut r = Reader {
            word: word >> (self.param_bits + MODE_BITS),
        };
        let input = ActionId(r.take(INPUT_BITS) as u16);
        let n = r.take(COUNT_BITS);
        let mut responses = Responses::new();
        for _ in 0..n {
            responses.push(r.take(RESPONSE_BITS) as u8);
        }
        (input, responses)
    }

    pub fn unpack(&self, word: Packed) -> ControllerState {
        let params = self.unpack_params(self.params_of(word));
        let mode = match self.mode_of(word) {
            0 => Mode::Stable,
            m => {
                let (input, responses) = self.context_of(word);
                let input = self.alphabet.get(input);
                if m == 1 {
                    Mode::Awaiting { input, responses }
                } else {
                    let shift = self.param_bits + MODE_BITS + INPUT_BITS + COUNT_BITS + 4 * RESPONSE_BITS;
                    let emitted = ((word >> shift) & ((1 << EMITTED_BITS) - 1)) as u8;
                    Mode::Emitting {
                        input,
                        responses,
                        emitted,
                    }
                }
            }
        };
        ControllerState { params, mode }
    }
}
