//! Built-in example programs: privatization and publication idioms and
//! the racy programs that motivate them.

use crate::ast::Program;
use crate::parse::parse_program;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CorpusEntry {
    pub name: &'static str,
    pub summary: &'static str,
    pub source: &'static str,
}

impl CorpusEntry {
    pub fn program(&self) -> Program {
        parse_program(self.source).expect("corpus programs parse")
    }
}

pub const CORPUS: &[CorpusEntry] = &[
    CorpusEntry {
        name: "fig1",
        summary: "privatization: a transaction marks x private, then x is written outside transactions",
        source: "\
init priv = 0;
init x = 0;

thread t1 {
    l1 = atomic { priv.write(1); };
    if (l1 == committed) {
        x.write(1);
    }
}

thread t2 {
    r2 = atomic {
        l = priv.read();
        if (l == 0) {
            x.write(42);
        }
    };
}

post l1 == committed => x == 1;
",
    },
    CorpusEntry {
        name: "fig2",
        summary: "publication: x is initialized outside transactions, then a flag is set transactionally",
        source: "\
init shared = 0;
init x = 0;

thread t1 {
    x.write(42);
    l1 = atomic { shared.write(1); };
}

thread t2 {
    l2 = atomic {
        l3 = shared.read();
        if (l3 == 1) {
            l4 = x.read();
        }
    };
}

post (l2 == committed && l3 == 1) => l4 == 42;
",
    },
    CorpusEntry {
        name: "fig3",
        summary: "racy: non-transactional reads of registers a transaction writes",
        source: "\
thread t1 {
    r1 = atomic {
        x.write(1);
        y.write(2);
    };
}

thread t2 {
    l1 = x.read();
    l2 = y.read();
}

post l1 == 1 => l2 == 2;
",
    },
    CorpusEntry {
        name: "fig5",
        summary: "privatization by agreement outside transactions: a flag polled non-transactionally",
        source: "\
thread t1 {
    l1 = atomic { x.write(42); };
    x_is_ready.write(1);
}

thread t2 {
    do {
        l2 = x_is_ready.read();
    } while (l2 == 0);
    l3 = x.read();
}

post l1 == committed => l3 == 42;
",
    },
    CorpusEntry {
        name: "fig6",
        summary: "proxy privatization: one thread privatizes, another accesses the data",
        source: "\
thread t1 {
    r1 = atomic { priv.write(1); };
}

thread t2 {
    l1 = atomic { l2 = priv.read(); };
    if (l1 == committed && l2 == 1) {
        x.write(1);
    }
}

thread t3 {
    r3 = atomic {
        l3 = priv.read();
        if (l3 == 0) {
            x.write(42);
        }
    };
}

post (l1 == committed && l2 == 1) => x == 1;
",
    },
    CorpusEntry {
        name: "thm25",
        summary: "privatization with a non-transactional read; invisible-read TMs without fences break it",
        source: "\
thread t1 {
    l1 = atomic { priv.write(1); };
    if (l1 == committed) {
        l2 = x.read();
    }
}

thread t2 {
    r2 = atomic {
        l = priv.read();
        if (l == 0) {
            x.write(42);
        }
    };
}
",
    },
];

pub fn corpus_entry(name: &str) -> Option<&'static CorpusEntry> {
    CORPUS.iter().find(|e| e.name == name)
}
