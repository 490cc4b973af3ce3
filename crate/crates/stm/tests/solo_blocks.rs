//! Solo atomic blocks on the write-back TMs commit and write back what
//! they wrote.

use std::collections::BTreeMap;

use proptest::prelude::*;
use txlab_core::{Kind, Reg};
use txlab_stm::props::{solo_block, write_back_violations};
use txlab_stm::{Algorithm, Response, Request};

fn request() -> impl Strategy<Value = Request> {
    let reg = prop_oneof![Just(Reg::new("x")), Just(Reg::new("y")), Just(Reg::new("z"))];
    prop_oneof![
        reg.clone().prop_map(Request::Read),
        (reg, 1..=3i64).prop_map(|(x, v)| Request::Write(x, v)),
    ]
}

fn body() -> impl Strategy<Value = Vec<Request>> {
    prop::collection::vec(request(), 0..=6)
        .prop_filter("at most four writes", |b| b.iter().filter(|r| matches!(r, Request::Write(..))).count() <= 4)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn committed_solo_blocks_write_back(body in body()) {
        for alg in [Algorithm::FencedTl2, Algorithm::TwoPl] {
            let (exec, last) = solo_block(alg, &body);
            prop_assert_eq!(last, Some(Response::Committed));
            prop_assert_eq!(write_back_violations(&exec), Vec::<String>::new());
            prop_assert!(exec.stray_write_backs().is_empty());
        }
    }

    #[test]
    fn solo_reads_see_own_writes(body in body()) {
        let (exec, _) = solo_block(Algorithm::FencedTl2, &body);
        let mut mine: BTreeMap<Reg, i64> = BTreeMap::new();
        let acts: Vec<Kind> = exec.actions.iter().map(|a| a.kind).filter(|k| k.is_interface()).collect();
        for w in acts.windows(2) {
            match (w[0], w[1]) {
                (Kind::Write(x, v), Kind::RetUnit) => {
                    mine.insert(x, v);
                }
                (Kind::Read(x), Kind::Ret(v)) => prop_assert_eq!(v, mine.get(&x).copied().unwrap_or(0)),
                _ => {}
            }
        }
    }
}
