//! Canonical machine forms answer future schedules like the originals.

use proptest::prelude::*;
use txlab_core::Reg;
use txlab_stm::{Algorithm, Effect, Machine, Request, Response, Status};

/// Interprets `choice` as a legal move for thread `t`, if one exists, and
/// returns the response it produced.
fn drive(m: &mut Machine, t: u32, choice: u8) -> Option<Option<Response>> {
    let x = [Reg::new("x"), Reg::new("y")][(choice & 1) as usize];
    let mut out = Vec::new();
    if m.status(t) == Status::Ready && choice % 3 != 0 {
        m.step(t, &mut out);
    } else if m.can_submit(t) {
        let r = if !m.in_tx(t) {
            Request::Begin
        } else {
            match choice % 4 {
                0 => Request::Read(x),
                1 => Request::Write(x, 1 + (choice % 3) as i64),
                _ => Request::Commit,
            }
        };
        m.submit(t, r).ok()?;
    } else if m.nontx_enabled(t) {
        if choice % 2 == 0 {
            m.nontx_read(t, x, &mut out);
        } else {
            m.nontx_write(t, x, 2, &mut out);
        }
    } else {
        return None;
    }
    Some(out.into_iter().find_map(|e| match e {
        Effect::Respond(r) => Some(r),
        _ => None,
    }))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn canonical_forms_behave_alike(
        alg in prop::sample::select(Algorithm::ALL.to_vec()),
        prefix in prop::collection::vec((1u32..=2, any::<u8>()), 0..40),
        suffix in prop::collection::vec((1u32..=2, any::<u8>()), 0..40),
    ) {
        let mut m = Machine::new(alg, 2);
        for (t, c) in prefix {
            drive(&mut m, t, c);
        }
        let mut c = m.canonical();
        prop_assert_eq!(c.canonical(), c.clone());
        for (t, ch) in suffix {
            prop_assert_eq!(drive(&mut m, t, ch), drive(&mut c, t, ch));
            prop_assert_eq!(m.memory(), c.memory());
        }
        prop_assert_eq!(m.canonical(), c.canonical());
    }
}
