use txlab_lang::{explore_exact, parse_program, Bounds};
use txlab_testkit::traceset::{gen_micro_program, oracle_traces};

fn exact(src: &str) -> (usize, bool) {
    let p = parse_program(src).unwrap();
    let b = Bounds { depth: 64, ..Bounds::default() };
    let ours = explore_exact(&p, b);
    let theirs = oracle_traces(&p);
    (ours.len(), ours == theirs)
}

#[test]
fn handwritten_programs_match_the_literal_construction() {
    for src in [
        "thread a { l = atomic { x.write(1); }; } thread b { v = x.read(); }",
        "thread a { v = x.read(); if (v == 1) { m = 1; } else { skip; } } thread b { x.write(1); }",
        "thread a { r = atomic { v = x.read(); x.write(v); }; }",
    ] {
        let (n, same) = exact(src);
        assert!(same, "{src}");
        assert!(n > 1);
    }
}

#[test]
fn generated_programs_match_the_literal_construction() {
    let mut rng = txlab_testkit::rng(2024);
    for _ in 0..40 {
        let src = gen_micro_program(&mut rng, 6);
        assert!(exact(&src).1, "{src}");
    }
}

