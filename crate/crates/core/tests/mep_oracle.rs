use multiexpr::engine::Variation;
use multiexpr::mep::{decode_expression, evaluate_all, Chromosome, CrossoverKind, FitnessCases, Gene, Layout, MepOps, MutationSpec};
use multiexpr::primitives::{real, PrimitiveSet, Signature};
use multiexpr::rng::seeded;
use proptest::prelude::*;

fn set(terminals: usize) -> PrimitiveSet<f64> {
    let functions = ["+", "-", "*", "/", "sin", "exp"].iter().map(|f| real::by_name(f).unwrap()).collect();
    PrimitiveSet::new((0..terminals).map(|i| format!("x{i}")).collect(), functions).unwrap()
}

fn recursive(c: &Chromosome, set: &PrimitiveSet<f64>, gene: usize, row: &[f64]) -> f64 {
    match c.genes[gene] {
        Gene::Terminal(t) => row[t],
        Gene::Function { op, args } => {
            let values: Vec<f64> = args.iter().map(|a| recursive(c, set, a, row)).collect();
            set.functions()[op].apply(&values).unwrap()
        }
    }
}

#[test]
fn worked_chromosome_decodes_and_evaluates() {
    let s = set(2);
    let c = Chromosome::new(vec![
        Gene::Terminal(0),
        Gene::Terminal(1),
        Gene::function(0, &[0, 1]),
        Gene::function(2, &[2, 0]),
    ]);
    assert_eq!(decode_expression(&c, &s, 3), "((x0+x1)*x0)");
    let cases = FitnessCases::from_columns(vec![vec![2.0, -1.0], vec![3.0, 4.0]]);
    let mut c2 = c.clone();
    let m = evaluate_all(&mut c2, &s, &cases, &mut seeded(0));
    assert_eq!(m.value(3, 0), 10.0);
    assert_eq!(m.value(3, 1), -3.0);
    assert_eq!(c2, c);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn forward_pass_matches_recursion(seed in any::<u64>(), nt in 1usize..4, len in 1usize..20, n in 1usize..6) {
        let s = set(nt);
        let ops = MepOps::new(s.signature().clone(), len, CrossoverKind::Uniform, MutationSpec::Symbols(2));
        let mut rng = seeded(seed);
        let mut c = ops.random(&mut rng);
        let columns: Vec<Vec<f64>> = (0..nt).map(|t| (0..n).map(|k| (t * 7 + k * 3) as f64 / 4.0 - 2.0).collect()).collect();
        let cases = FitnessCases::from_columns(columns);
        let m = evaluate_all(&mut c, &s, &cases, &mut rng);
        prop_assert!(c.is_valid(s.signature()));
        for g in 0..len {
            for k in 0..n {
                prop_assert_eq!(m.value(g, k).to_bits(), recursive(&c, &s, g, &cases.row(k)).to_bits());
            }
        }
    }

    #[test]
    fn operators_preserve_validity(
        seed in any::<u64>(),
        nt in 1usize..5,
        len in 1usize..25,
        kind in prop_oneof![Just(CrossoverKind::OnePoint), Just(CrossoverKind::TwoPoint), Just(CrossoverKind::Uniform)],
        per_gene in 0.0f64..1.0,
        terminals_first in any::<bool>(),
    ) {
        let sig = Signature::new(nt, vec![2, 1, 3]);
        let layout = if terminals_first { Layout::TerminalsFirst } else { Layout::Free };
        let ops = MepOps::new(sig.clone(), len, kind, MutationSpec::PerGene(per_gene)).with_layout(layout);
        let mut rng = seeded(seed);
        let (a, b) = (ops.random(&mut rng), ops.random(&mut rng));
        let (mut x, mut y) = ops.crossover(&a, &b, &mut rng);
        ops.mutate(&mut x, &mut rng);
        ops.mutate(&mut y, &mut rng);
        prop_assert!(x.is_valid(&sig) && y.is_valid(&sig));
        prop_assert_eq!((x.len(), y.len()), (len, len));
    }
}
