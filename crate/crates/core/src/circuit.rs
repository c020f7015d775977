//! Multi-output boolean circuits.
//!
//! A truth table lists every input combination in ascending binary order
//! with the first input as the most significant bit. Each gene of a MEP
//! chromosome is scored against each output column, and outputs are then
//! assigned greedily to distinct genes.

use std::io::Write;

use rand::Rng;

use crate::error::{Error, Result};
use crate::mep::{active_genes, evaluate_all, Chromosome, FitnessCases, Gene};
use crate::primitives::{boolean, Function, PrimitiveSet};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruthTable {
    pub input_names: Vec<String>,
    pub output_names: Vec<String>,
    /// `inputs[row][i]`.
    pub inputs: Vec<Vec<u8>>,
    /// `outputs[row][q]`.
    pub outputs: Vec<Vec<u8>>,
}

impl TruthTable {
    /// Builds a table by evaluating `f` on every input combination.
    pub fn from_fn(
        input_names: Vec<String>,
        output_names: Vec<String>,
        f: impl Fn(&[u8]) -> Vec<u8>,
    ) -> Self {
        let ni = input_names.len();
        let inputs: Vec<Vec<u8>> = (0..1usize << ni).map(|r| bits_msb(r, ni)).collect();
        let outputs: Vec<Vec<u8>> = inputs
            .iter()
            .map(|row| {
                let out = f(row);
                assert_eq!(out.len(), output_names.len());
                out
            })
            .collect();
        Self {
            input_names,
            output_names,
            inputs,
            outputs,
        }
    }

    pub fn num_inputs(&self) -> usize {
        self.input_names.len()
    }

    pub fn num_outputs(&self) -> usize {
        self.output_names.len()
    }

    pub fn num_rows(&self) -> usize {
        self.inputs.len()
    }

    /// Output column `q` over all rows.
    pub fn output_column(&self, q: usize) -> Vec<u8> {
        self.outputs.iter().map(|r| r[q]).collect()
    }

    /// The input columns as MEP fitness cases.
    pub fn fitness_cases(&self) -> FitnessCases<u8> {
        FitnessCases::from_rows(&self.inputs)
    }

    /// One CSV row per input combination, inputs then outputs.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(self.input_names.iter().chain(&self.output_names))?;
        for (i, o) in self.inputs.iter().zip(&self.outputs) {
            w.write_record(i.iter().chain(o).map(u8::to_string))?;
        }
        w.flush()?;
        Ok(())
    }
}

fn bits_msb(value: usize, width: usize) -> Vec<u8> {
    (0..width)
        .map(|i| ((value >> (width - 1 - i)) & 1) as u8)
        .collect()
}

fn value_msb(bits: &[u8]) -> usize {
    bits.iter().fold(0, |acc, &b| (acc << 1) | b as usize)
}

fn names(prefix: &str, count: usize) -> Vec<String> {
    (0..count).map(|i| format!("{prefix}{i}")).collect()
}

/// Names of a `width`-bit number written most significant bit first.
fn msb_names(prefix: &str, width: usize) -> Vec<String> {
    (0..width).rev().map(|i| format!("{prefix}{i}")).collect()
}

/// Even-`k`-parity: 1 iff the input holds an even number of ones.
pub fn parity_target(k: usize) -> Result<TruthTable> {
    if !(2..=16).contains(&k) {
        return Err(Error::InvalidParameter(format!("parity arity {k} outside 2..=16")));
    }
    Ok(TruthTable::from_fn(names("x", k), vec!["even".into()], |row| {
        vec![u8::from(row.iter().filter(|&&b| b == 1).count() % 2 == 0)]
    }))
}

/// Multiplexer with `k` address bits `a_{k-1} .. a_0` followed by the data
/// bits `d_0 .. d_{2^k - 1}`.
pub fn multiplexer_target(k: usize) -> Result<TruthTable> {
    if !(1..=3).contains(&k) {
        return Err(Error::InvalidParameter(format!("multiplexer address width {k} outside 1..=3")));
    }
    let inputs = msb_names("a", k)
        .into_iter()
        .chain(names("d", 1 << k))
        .collect();
    Ok(TruthTable::from_fn(inputs, vec!["out".into()], |row| {
        let address = value_msb(&row[..k]);
        vec![row[k + address]]
    }))
}

/// `n`-bit adder; with `carry_in` an extra carry input follows the operands.
pub fn adder_target(n: usize, carry_in: bool) -> Result<TruthTable> {
    if !(1..=4).contains(&n) {
        return Err(Error::InvalidParameter(format!("adder width {n} outside 1..=4")));
    }
    let mut inputs = msb_names("a", n);
    inputs.extend(msb_names("b", n));
    if carry_in {
        inputs.push("cin".into());
    }
    Ok(TruthTable::from_fn(inputs, msb_names("s", n + 1), |row| {
        let a = value_msb(&row[..n]);
        let b = value_msb(&row[n..2 * n]);
        let c = if carry_in { row[2 * n] as usize } else { 0 };
        bits_msb(a + b + c, n + 1)
    }))
}

/// `n`-bit by `n`-bit multiplier with a `2n`-bit product.
pub fn multiplier_target(n: usize) -> Result<TruthTable> {
    if !(1..=3).contains(&n) {
        return Err(Error::InvalidParameter(format!("multiplier width {n} outside 1..=3")));
    }
    let mut inputs = msb_names("a", n);
    inputs.extend(msb_names("b", n));
    Ok(TruthTable::from_fn(inputs, msb_names("p", 2 * n), |row| {
        let a = value_msb(&row[..n]);
        let b = value_msb(&row[n..]);
        bits_msb(a * b, 2 * n)
    }))
}

/// Subset-sum circuit over the base set `{1..base_max}`: input bit `k - 1`
/// set means `k` belongs to the encoded set `M`; the output is 1 iff some
/// subset of `M` sums to `target_sum`.
pub fn knapsack_target(base_max: usize, target_sum: usize) -> Result<TruthTable> {
    if !(1..=10).contains(&base_max) {
        return Err(Error::InvalidParameter(format!("knapsack base {base_max} outside 1..=10")));
    }
    let inputs = (1..=base_max).map(|k| format!("m{k}")).collect();
    Ok(TruthTable::from_fn(inputs, vec!["reachable".into()], |row| {
        let members: Vec<usize> = (0..base_max).filter(|&i| row[i] == 1).map(|i| i + 1).collect();
        let mut reachable = vec![false; target_sum + 1];
        reachable[0] = true;
        for m in members {
            for s in (m..=target_sum).rev() {
                reachable[s] |= reachable[s - m];
            }
        }
        vec![u8::from(target_sum > 0 && reachable[target_sum])]
    }))
}

/// Number of gates in the table of basic gates.
pub const NUM_GATES: usize = 20;

/// Evaluates gate `gate_id`; operands a gate does not use are ignored.
pub fn gate_eval(gate_id: usize, a: u8, b: u8, c: u8) -> Result<u8> {
    let n = |x: u8| 1 - x;
    Ok(match gate_id {
        0 => 0,
        1 => 1,
        2 => a,
        3 => b,
        4 => n(a),
        5 => n(b),
        6 => a & b,
        7 => a & n(b),
        8 => n(a) & b,
        9 => n(a) & n(b),
        10 => a ^ b,
        11 => a ^ n(b),
        12 => a | b,
        13 => a | n(b),
        14 => n(a) | b,
        15 => n(a) | n(b),
        16 => (a & n(c)) | (b & c),
        17 => (a & n(c)) | (n(b) & c),
        18 => (n(a) & n(c)) | (b & c),
        19 => (n(a) & n(c)) | (n(b) & c),
        _ => return Err(Error::InvalidGate(gate_id)),
    })
}

/// Gate `gate_id` as a function symbol; gates 0 to 15 take two operands and
/// gates 16 to 19 take three.
pub fn gate_function(gate_id: usize) -> Result<Function<u8>> {
    gate_eval(gate_id, 0, 0, 0)?;
    let arity = if gate_id >= 16 { 3 } else { 2 };
    Ok(Function::prefix(format!("G{gate_id}"), arity, move |x: &[u8]| {
        gate_eval(gate_id, x[0], x[1], x.get(2).copied().unwrap_or(0)).ok()
    }))
}

/// A primitive set over the table's inputs with the given gates.
pub fn gate_set(table: &TruthTable, gates: &[usize]) -> Result<PrimitiveSet<u8>> {
    let functions = gates.iter().map(|&g| gate_function(g)).collect::<Result<_>>()?;
    PrimitiveSet::new(table.input_names.clone(), functions)
}

/// A primitive set over the table's inputs with named boolean functions such
/// as `AND`, `OR`, `NAND`, `NOR`, `NOT`, `IF`.
pub fn boolean_set(table: &TruthTable, functions: &[&str]) -> Result<PrimitiveSet<u8>> {
    let functions = functions.iter().map(|f| boolean::by_name(f)).collect::<Result<_>>()?;
    PrimitiveSet::new(table.input_names.clone(), functions)
}

/// `f[gene][output]`: Hamming distance between a gene's values and an
/// output column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QualityMatrix {
    pub num_genes: usize,
    pub num_outputs: usize,
    entries: Vec<u32>,
}

impl QualityMatrix {
    pub fn from_entries(num_genes: usize, num_outputs: usize, entries: Vec<u32>) -> Self {
        assert_eq!(entries.len(), num_genes * num_outputs);
        Self {
            num_genes,
            num_outputs,
            entries,
        }
    }

    pub fn get(&self, gene: usize, output: usize) -> u32 {
        self.entries[gene * self.num_outputs + output]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputAssignment {
    /// Gene assigned to each output.
    pub genes: Vec<usize>,
    pub fitness: u32,
}

/// Evaluates the chromosome once and scores every gene against every output.
pub fn quality_matrix<R: Rng + ?Sized>(
    chromosome: &mut Chromosome,
    set: &PrimitiveSet<u8>,
    table: &TruthTable,
    cases: &FitnessCases<u8>,
    rng: &mut R,
) -> QualityMatrix {
    let m = evaluate_all(chromosome, set, cases, rng);
    let no = table.num_outputs();
    let columns: Vec<Vec<u8>> = (0..no).map(|q| table.output_column(q)).collect();
    let mut entries = Vec::with_capacity(m.num_genes() * no);
    for i in 0..m.num_genes() {
        let values = m.gene(i);
        for column in &columns {
            let d = values.iter().zip(column).filter(|(o, w)| o != w).count();
            entries.push(d as u32);
        }
    }
    QualityMatrix::from_entries(m.num_genes(), no, entries)
}

/// Greedy assignment: outputs in order each take the unassigned gene with
/// the lowest entry, ties to the lowest index.
pub fn assign_outputs(matrix: &QualityMatrix) -> Result<OutputAssignment> {
    if matrix.num_genes < matrix.num_outputs {
        return Err(Error::InfeasibleAssignment {
            genes: matrix.num_genes,
            outputs: matrix.num_outputs,
        });
    }
    let mut taken = vec![false; matrix.num_genes];
    let mut genes = Vec::with_capacity(matrix.num_outputs);
    let mut fitness = 0;
    for q in 0..matrix.num_outputs {
        let best = (0..matrix.num_genes)
            .filter(|&i| !taken[i])
            .min_by_key(|&i| (matrix.get(i, q), i))
            .expect("enough genes remain");
        taken[best] = true;
        genes.push(best);
        fitness += matrix.get(best, q);
    }
    Ok(OutputAssignment { genes, fitness })
}

/// Number of distinct gates used by the assigned output genes.
pub fn gate_count(chromosome: &Chromosome, outputs: &[usize]) -> usize {
    let mut used = vec![false; chromosome.len()];
    for &o in outputs {
        for g in active_genes(chromosome, o) {
            used[g] = true;
        }
    }
    used.iter()
        .zip(&chromosome.genes)
        .filter(|(&u, g)| u && matches!(g, Gene::Function { .. }))
        .count()
}

/// A circuit design task ready for evolution.
#[derive(Debug, Clone)]
pub struct CircuitProblem {
    pub table: TruthTable,
    pub set: PrimitiveSet<u8>,
    cases: FitnessCases<u8>,
}

impl CircuitProblem {
    pub fn new(table: TruthTable, set: PrimitiveSet<u8>) -> Self {
        let cases = table.fitness_cases();
        Self { table, set, cases }
    }

    pub fn assignment<R: Rng + ?Sized>(
        &self,
        chromosome: &mut Chromosome,
        rng: &mut R,
    ) -> Result<OutputAssignment> {
        let m = quality_matrix(chromosome, &self.set, &self.table, &self.cases, rng);
        assign_outputs(&m)
    }

    /// Total Hamming error of the best assignment.
    pub fn fitness<R: Rng + ?Sized>(&self, chromosome: &mut Chromosome, rng: &mut R) -> f64 {
        self.assignment(chromosome, rng)
            .map_or(f64::INFINITY, |a| a.fitness as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn gate_examples() {
        assert_eq!(gate_eval(16, 1, 0, 0).unwrap(), 1);
        assert_eq!(gate_eval(10, 1, 1, 0).unwrap(), 0);
        for bits in 0..8u8 {
            assert_eq!(gate_eval(0, bits & 1, (bits >> 1) & 1, bits >> 2).unwrap(), 0);
        }
        assert!(matches!(gate_eval(20, 0, 0, 0), Err(Error::InvalidGate(20))));
    }

    #[test]
    fn parity_rows() {
        let t = parity_target(3).unwrap();
        assert_eq!(t.num_rows(), 8);
        assert_eq!(t.outputs[0b101], vec![1]);
        assert_eq!(t.output_column(0).iter().filter(|&&b| b == 1).count(), 4);
        let t2 = parity_target(2).unwrap();
        assert_eq!(t2.output_column(0), vec![1, 0, 0, 1]);
    }

    #[test]
    fn multiplexer_addressing() {
        let t = multiplexer_target(2).unwrap();
        assert_eq!(t.input_names, vec!["a1", "a0", "d0", "d1", "d2", "d3"]);
        let row = [0, 0, 1, 0, 0, 0];
        let r = value_msb(&row);
        assert_eq!(t.outputs[r], vec![1]);
        let row = [1, 0, 0, 0, 1, 0];
        assert_eq!(t.outputs[value_msb(&row)], vec![1]);
        assert_eq!(multiplexer_target(3).unwrap().num_rows(), 2048);
    }

    #[test]
    fn arithmetic_tables() {
        let m = multiplier_target(2).unwrap();
        assert_eq!(m.outputs[0b1111], vec![1, 0, 0, 1]);
        let a = adder_target(2, false).unwrap();
        assert_eq!((a.num_rows(), a.num_inputs(), a.num_outputs()), (16, 4, 3));
        let c = adder_target(2, true).unwrap();
        assert_eq!((c.num_rows(), c.num_inputs(), c.num_outputs()), (32, 5, 3));
        assert_eq!(c.outputs[0b11111], vec![1, 1, 1]);
    }

    #[test]
    fn knapsack_encoding() {
        let t = knapsack_target(7, 7).unwrap();
        let row = [0, 1, 0, 0, 1, 1, 0];
        assert_eq!(t.outputs[value_msb(&row)], vec![1]);
        assert_eq!(t.outputs[0], vec![0]);
        let t = knapsack_target(7, 4).unwrap();
        assert_eq!(t.outputs[value_msb(&row)], vec![0]);
    }

    #[test]
    fn constant_gene_against_parity() {
        let t = parity_target(3).unwrap();
        let set = gate_set(&t, &[0]).unwrap();
        let mut c = Chromosome::new(vec![Gene::Terminal(0), Gene::function(0, &[0, 0])]);
        let m = quality_matrix(&mut c, &set, &t, &t.fitness_cases(), &mut seeded(0));
        assert_eq!(m.get(1, 0), 4);
    }

    #[test]
    fn diagonal_assignment() {
        let m = QualityMatrix::from_entries(2, 2, vec![0, 5, 5, 0]);
        let a = assign_outputs(&m).unwrap();
        assert_eq!(a.genes, vec![0, 1]);
        assert_eq!(a.fitness, 0);
        let m = QualityMatrix::from_entries(1, 2, vec![0, 0]);
        assert!(assign_outputs(&m).is_err());
    }

    #[test]
    fn hand_built_half_adder_is_perfect() {
        let t = adder_target(1, false).unwrap();
        let set = gate_set(&t, &[6, 10]).unwrap();
        let mut c = Chromosome::new(vec![
            Gene::Terminal(0),
            Gene::Terminal(1),
            Gene::function(1, &[0, 1]),
            Gene::function(0, &[0, 1]),
        ]);
        let p = CircuitProblem::new(t, set);
        let a = p.assignment(&mut c, &mut seeded(0)).unwrap();
        assert_eq!(a.fitness, 0);
        assert_eq!(a.genes, vec![3, 2]);
        assert_eq!(gate_count(&c, &a.genes), 2);
    }

    #[test]
    fn csv_export() {
        let mut out = Vec::new();
        parity_target(2).unwrap().write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text, "x0,x1,even\n0,0,1\n0,1,0\n1,0,0\n1,1,1\n");
    }
}
