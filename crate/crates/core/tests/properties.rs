use pdgloss::closed_form::{confidences_to_alpha, pdg_divergence, renyi_divergence};
use pdgloss::dsl::{parse, serialize};
use pdgloss::scoring::gamma_score;
use pdgloss::{min_gamma_score, Cpd, Edge, Pdg, SolveOptions, Variable};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn simplex(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
    let z: f64 = w.iter().sum();
    w.iter().map(|x| x / z).collect()
}

fn random_edge(rng: &mut impl Rng, vars: &[Variable], label: String) -> Edge {
    let t = rng.random_range(0..vars.len());
    let sources: Vec<Variable> = if vars.len() > 1 && rng.random_bool(0.5) {
        vec![vars[(t + rng.random_range(1..vars.len())) % vars.len()].clone()]
    } else {
        vec![]
    };
    let rows: usize = sources.iter().map(Variable::size).product();
    let table = (0..rows).flat_map(|_| simplex(rng, vars[t].size())).collect();
    let cpd = Cpd::new(sources, vec![vars[t].clone()], table).unwrap();
    Edge::new(label, cpd).with_beta(rng.random_range(1.0..3.0)).with_alpha(rng.random_range(0.0..1.0))
}

fn random_pdg(seed: u64) -> Pdg {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vars: Vec<Variable> =
        (0..rng.random_range(1..=3)).map(|i| Variable::indexed(format!("V{i}"), rng.random_range(2..=3))).collect();
    let edges = (0..rng.random_range(1..=3)).map(|i| random_edge(&mut rng, &vars, format!("e{i}"))).collect();
    Pdg::new(vars, edges).unwrap()
}

fn distribution(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.05f64..1.0, len).prop_map(|w| {
        let z: f64 = w.iter().sum();
        w.into_iter().map(|x| x / z).collect()
    })
}

fn pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (2usize..=5).prop_flat_map(|n| (distribution(n), distribution(n)))
}

/// Writes a PDG in the model-file language by hand.
fn to_text(pdg: &Pdg) -> String {
    let mut out = String::new();
    for v in pdg.variables() {
        out += &format!("var {} {{{}}}\n", v.name(), v.domain().join(", "));
    }
    for e in pdg.edges() {
        let names = |vs: &[Variable]| vs.iter().map(|v| v.name().to_string()).collect::<Vec<_>>().join(", ");
        let rows: Vec<String> = (0..e.cpd.rows())
            .map(|r| format!("[{}]", e.cpd.row(r).iter().map(|p| format!("{p:e}")).collect::<Vec<_>>().join(", ")))
            .collect();
        let src = names(e.cpd.sources());
        let table = if e.cpd.sources().is_empty() { rows[0].clone() } else { format!("[{}]", rows.join(",\n  ")) };
        out += &format!("cpd {} : {src} -> {} = {table}\n", e.label, names(e.cpd.targets()));
        out += &format!("edge {} beta={} alpha={}\n", e.label, e.beta, e.alpha);
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn inconsistency_is_the_score_at_the_argmin(seed in any::<u64>(), gamma in prop::sample::select(vec![0.0, 0.5, 1.0])) {
        let pdg = random_pdg(seed);
        let r = min_gamma_score(&pdg, gamma, &SolveOptions::default()).unwrap();
        prop_assert!(r.converged);
        let at = gamma_score(&pdg, &r.argmin, gamma).unwrap();
        prop_assert!((at.value() - r.inconsistency.value()).abs() < 1e-9);
        if gamma == 0.0 {
            prop_assert!(r.inconsistency.value() >= 0.0, "{:e}", r.inconsistency.value());
        }
    }

    #[test]
    fn more_beliefs_never_help(seed in any::<u64>(), gamma in prop::sample::select(vec![0.0, 0.5, 1.0])) {
        let pdg = random_pdg(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let extra = random_edge(&mut rng, pdg.variables(), "extra".into());
        let bigger = pdg.with_edge(extra).unwrap();
        let opts = SolveOptions::default();
        let a = min_gamma_score(&pdg, gamma, &opts).unwrap().inconsistency.value();
        let b = min_gamma_score(&bigger, gamma, &opts).unwrap().inconsistency.value();
        prop_assert!(a <= b + 1e-7, "{} > {}", a, b);
    }

    #[test]
    fn sequential_and_parallel_agree(seed in any::<u64>()) {
        let pdg = random_pdg(seed);
        let opts = SolveOptions::default().with_seed(seed);
        let a = min_gamma_score(&pdg, 0.5, &opts).unwrap();
        let b = min_gamma_score(&pdg, 0.5, &opts.clone().sequential()).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn divergence_symmetries((p, q) in pair(), r in 0.1f64..5.0, s in 0.1f64..5.0) {
        let d = pdg_divergence(&p, &q, r, s).unwrap().value();
        prop_assert!(d >= 0.0);
        prop_assert!((d - pdg_divergence(&q, &p, s, r).unwrap().value()).abs() < 1e-12);
        prop_assert!(pdg_divergence(&p, &p, r, s).unwrap().value() < 1e-12);
        let (alpha, scale) = confidences_to_alpha(r, s).unwrap();
        prop_assert!((d - scale * renyi_divergence(&p, &q, alpha).unwrap().value()).abs() < 1e-10);
    }

    #[test]
    fn divergence_grows_with_confidence((p, q) in pair(), r in 0.1f64..5.0, s in 0.1f64..5.0, k in 1.0f64..3.0) {
        let d = pdg_divergence(&p, &q, r, s).unwrap().value();
        prop_assert!(pdg_divergence(&p, &q, k * r, s).unwrap().value() >= d - 1e-12);
        prop_assert!((pdg_divergence(&p, &q, k * r, k * s).unwrap().value() - k * d).abs() < 1e-10);
    }

    #[test]
    fn handwritten_files_round_trip(seed in any::<u64>()) {
        let pdg = random_pdg(seed);
        let doc = parse(&to_text(&pdg)).unwrap();
        let rebuilt = doc.to_pdg().unwrap();
        prop_assert_eq!(rebuilt.variables(), pdg.variables());
        for (a, b) in rebuilt.edges().iter().zip(pdg.edges()) {
            prop_assert_eq!(&a.label, &b.label);
            prop_assert_eq!(a.beta, b.beta);
            prop_assert_eq!(a.alpha, b.alpha);
            prop_assert_eq!(a.cpd.table(), b.cpd.table());
        }
        let once = serialize(&doc);
        let again = parse(&once).unwrap();
        prop_assert_eq!(serialize(&again), once);
        for (a, b) in again.to_pdg().unwrap().edges().iter().zip(pdg.edges()) {
            for (x, y) in a.cpd.table().iter().zip(b.cpd.table()) {
                prop_assert!((x - y).abs() < 1e-11);
            }
        }
    }

    #[test]
    fn parser_is_total(text in "(var|cpd|edge|event|data|factor|values|query|X|[a-z0-9]|[ =:,#\\-\\[\\](){}>\n.]){0,60}") {
        match parse(&text) {
            Ok(doc) => {
                let _ = doc.to_pdg();
                let _ = serialize(&doc);
            }
            Err(e) => prop_assert!(e.line >= 1 && e.column >= 1),
        }
    }

    #[test]
    fn parser_survives_arbitrary_unicode(text in "\\PC{0,80}") {
        let _ = parse(&text);
    }
}
