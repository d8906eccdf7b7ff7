//! Regenerates the bundled weight-2 family files from point counts.
//!
//! cargo run -p mfunc-core --example families -- <out_dir>

use mfunc_core::forms::curve::Weierstrass;
use mfunc_core::forms::{ModularForm, RawCoeff};
use mfunc_core::harness::omega_sym_square;
use mfunc_core::primes::primes_up_to;
use serde_json::json;

const P_MAX: u64 = 2000;

fn curve(a: [i64; 5]) -> Weierstrass {
    Weierstrass { a1: a[0], a2: a[1], a3: a[2], a4: a[3], a6: a[4] }
}

fn main() {
    let out = std::env::args().nth(1).unwrap_or_else(|| "data/families".into());
    // (level, [(label, model, omega)]); omegas are Petersson-normalized harmonic weights
    let families: [(u64, &[(&str, [i64; 5], f64)]); 4] = [
        (11, &[("11a", [0, -1, 1, -10, -20], 1.6965)]),
        (17, &[("17a", [1, -1, 1, -1, -14], 1.4779)]),
        (19, &[("19a", [0, 1, 1, -9, -15], 1.1203)]),
        (37, &[("37a", [0, 0, 1, -1, 0], 0.2142), ("37b", [0, 1, 1, -23, -50], 0.8157)]),
    ];
    for (level, members) in families {
        let forms: Vec<_> = members
            .iter()
            .map(|(label, model, omega)| {
                let e = curve(*model);
                let ap: Vec<(u64, i64)> = primes_up_to(P_MAX).into_iter().map(|p| (p, e.ap(p))).collect();
                let rows = ap.iter().map(|&(p, a)| (p, RawCoeff::Int(a as i128))).collect();
                let f = ModularForm::from_raw(level, 2, label, rows).expect("valid eigenvalues");
                eprintln!("{label}: omega {omega}, sym-square estimate {:.4}", omega_sym_square(&f, P_MAX).unwrap());
                json!({ "label": label, "ap": ap, "omega": omega })
            })
            .collect();
        let sub = if level < 19 { format!("{out}/small") } else { out.clone() };
        std::fs::create_dir_all(&sub).unwrap();
        let doc = json!({ "level": level, "weight": 2, "p_max": P_MAX, "forms": forms });
        std::fs::write(format!("{sub}/level{level}.json"), serde_json::to_string(&doc).unwrap() + "\n").unwrap();
    }
}
