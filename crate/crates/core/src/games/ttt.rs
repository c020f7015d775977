//! Tic-Tac-Toe strategies scored against an exhaustive opponent.
//!
//! The strategy plays X and moves first. At each of its turns it evaluates
//! the board reached by every legal move and plays the preferred one. The
//! opponent tries every legal reply, and the fitness is the number of games
//! of that enumeration the strategy loses.

use std::collections::HashMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::mep::{best_gene, evaluate_all, expression_ids, Chromosome, FitnessCases};
use crate::primitives::{real, PrimitiveSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Cell {
    Empty,
    X,
    O,
}

impl Cell {
    /// Numeric encoding seen by evaluation formulas.
    pub fn value(self) -> f64 {
        match self {
            Cell::X => 5.0,
            Cell::O => -5.0,
            Cell::Empty => 2.0,
        }
    }
}

/// A board linearised row by row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Board(pub [Cell; 9]);

const LINES: [[usize; 3]; 8] = [
    [0, 1, 2],
    [3, 4, 5],
    [6, 7, 8],
    [0, 3, 6],
    [1, 4, 7],
    [2, 5, 8],
    [0, 4, 8],
    [2, 4, 6],
];

impl Board {
    pub fn empty() -> Self {
        Board([Cell::Empty; 9])
    }

    pub fn values(&self) -> [f64; 9] {
        self.0.map(Cell::value)
    }

    pub fn winner(&self) -> Option<Cell> {
        LINES.iter().find_map(|l| {
            let c = self.0[l[0]];
            (c != Cell::Empty && c == self.0[l[1]] && c == self.0[l[2]]).then_some(c)
        })
    }

    pub fn is_full(&self) -> bool {
        self.0.iter().all(|&c| c != Cell::Empty)
    }

    pub fn empty_squares(&self) -> impl Iterator<Item = usize> + '_ {
        (0..9).filter(|&i| self.0[i] == Cell::Empty)
    }

    pub fn with(&self, square: usize, cell: Cell) -> Board {
        let mut b = *self;
        b.0[square] = cell;
        b
    }

    fn code(&self) -> u32 {
        self.0.iter().fold(0, |acc, &c| {
            acc * 3
                + match c {
                    Cell::Empty => 0,
                    Cell::X => 1,
                    Cell::O => 2,
                }
        })
    }
}

/// Whether the strategy plays the successor with the highest or the lowest
/// evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preference {
    #[default]
    Max,
    Min,
}

impl Preference {
    fn better(self, candidate: f64, incumbent: f64) -> bool {
        match self {
            Preference::Max => candidate > incumbent,
            Preference::Min => candidate < incumbent,
        }
    }
}

/// Outcome counts of an exhaustive enumeration of games.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct GameCounts {
    pub wins: u64,
    pub losses: u64,
    pub draws: u64,
}

impl GameCounts {
    pub fn games(&self) -> u64 {
        self.wins + self.losses + self.draws
    }
}

/// Plays the strategy `choose` (which picks X's square) against every
/// possible sequence of O replies.
pub fn play_all(choose: &mut impl FnMut(&Board) -> usize) -> GameCounts {
    fn x_turn(board: Board, choose: &mut impl FnMut(&Board) -> usize, out: &mut GameCounts) {
        let square = choose(&board);
        let after = board.with(square, Cell::X);
        if after.winner() == Some(Cell::X) {
            out.wins += 1;
        } else if after.is_full() {
            out.draws += 1;
        } else {
            for reply in after.empty_squares().collect::<Vec<_>>() {
                let next = after.with(reply, Cell::O);
                if next.winner() == Some(Cell::O) {
                    out.losses += 1;
                } else if next.is_full() {
                    out.draws += 1;
                } else {
                    x_turn(next, choose, out);
                }
            }
        }
    }
    let mut out = GameCounts::default();
    x_turn(Board::empty(), choose, &mut out);
    out
}

/// Picks the empty square whose resulting board scores best; ties go to the
/// lowest square.
pub fn choose_by<F: FnMut(&Board) -> f64>(board: &Board, preference: Preference, mut score: F) -> usize {
    let mut best: Option<(usize, f64)> = None;
    for s in board.empty_squares() {
        let v = score(&board.with(s, Cell::X));
        if best.is_none_or(|(_, b)| preference.better(v, b)) {
            best = Some((s, v));
        }
    }
    best.expect("X is only asked to move on a non-full board").0
}

/// Number of games lost by the strategy that evaluates boards with
/// `formula`.
pub fn ttt_fitness(formula: impl Fn(&[f64; 9]) -> f64, preference: Preference) -> u64 {
    play_all(&mut |b: &Board| choose_by(b, preference, |n| formula(&n.values()))).losses
}

/// All boards that can arise directly after a move of X.
pub fn x_successor_boards() -> Vec<Board> {
    fn walk(board: Board, seen: &mut HashMap<u32, usize>, out: &mut Vec<Board>) {
        for s in board.empty_squares().collect::<Vec<_>>() {
            let after = board.with(s, Cell::X);
            if seen.contains_key(&after.code()) {
                continue;
            }
            seen.insert(after.code(), out.len());
            out.push(after);
            if after.winner().is_some() || after.is_full() {
                continue;
            }
            for r in after.empty_squares().collect::<Vec<_>>() {
                let next = after.with(r, Cell::O);
                if next.winner().is_none() && !next.is_full() {
                    walk(next, seen, out);
                }
            }
        }
    }
    let mut seen = HashMap::new();
    let mut out = Vec::new();
    walk(Board::empty(), &mut seen, &mut out);
    out
}

/// Outcome of X playing a particular square from an X-to-move position.
#[derive(Debug, Clone)]
struct Move {
    case: usize,
    o_wins: u64,
    next: Vec<usize>,
}

/// Tic-Tac-Toe strategy evolution with MEP over `p0 .. p8`.
///
/// Positions where X is to move form a DAG; the losses of a strategy from a
/// position depend only on that position, so every gene is scored with one
/// memoised bottom-up pass over the DAG.
#[derive(Debug, Clone)]
pub struct TttProblem {
    pub set: PrimitiveSet<f64>,
    pub preference: Preference,
    cases: FitnessCases<f64>,
    /// Candidate moves of each X-to-move position, by ascending square.
    moves: Vec<Vec<Move>>,
}

impl TttProblem {
    pub fn new(preference: Preference) -> Result<Self> {
        let terminals = (0..9).map(|i| format!("p{i}")).collect();
        let set = PrimitiveSet::new(terminals, real::arithmetic())?;
        let all = x_successor_boards();
        let rows: Vec<Vec<f64>> = all.iter().map(|b| b.values().to_vec()).collect();
        let case_of: HashMap<u32, usize> = all.iter().enumerate().map(|(i, b)| (b.code(), i)).collect();

        let mut positions: Vec<Board> = vec![Board::empty()];
        let mut position_of: HashMap<u32, usize> = HashMap::from([(Board::empty().code(), 0)]);
        let mut moves: Vec<Vec<Move>> = Vec::new();
        let mut i = 0;
        while i < positions.len() {
            let board = positions[i];
            let mut options = Vec::new();
            for s in board.empty_squares() {
                let after = board.with(s, Cell::X);
                let mut m = Move {
                    case: case_of[&after.code()],
                    o_wins: 0,
                    next: Vec::new(),
                };
                if after.winner().is_none() && !after.is_full() {
                    for r in after.empty_squares() {
                        let reply = after.with(r, Cell::O);
                        if reply.winner().is_some() {
                            m.o_wins += 1;
                        } else if !reply.is_full() {
                            let id = *position_of.entry(reply.code()).or_insert_with(|| {
                                positions.push(reply);
                                positions.len() - 1
                            });
                            m.next.push(id);
                        }
                    }
                }
                options.push(m);
            }
            moves.push(options);
            i += 1;
        }
        Ok(Self {
            set,
            preference,
            cases: FitnessCases::from_rows(&rows),
            moves,
        })
    }

    /// Losses of the strategy that scores boards with `values[case]`,
    /// visiting only positions the strategy can reach.
    fn losses(&self, values: &[f64]) -> u64 {
        let mut memo: Vec<Option<u64>> = vec![None; self.moves.len()];
        self.losses_from(0, values, &mut memo)
    }

    fn losses_from(&self, p: usize, values: &[f64], memo: &mut [Option<u64>]) -> u64 {
        if let Some(l) = memo[p] {
            return l;
        }
        let options = &self.moves[p];
        let mut chosen = &options[0];
        for m in &options[1..] {
            if self.preference.better(values[m.case], values[chosen.case]) {
                chosen = m;
            }
        }
        let mut total = chosen.o_wins;
        for &n in &chosen.next {
            total += self.losses_from(n, values, memo);
        }
        memo[p] = Some(total);
        total
    }

    /// Losses of every gene's strategy.
    pub fn gene_losses<R: Rng + ?Sized>(&self, chromosome: &mut Chromosome, rng: &mut R) -> Vec<u64> {
        let m = evaluate_all(chromosome, &self.set, &self.cases, rng);
        let ids = expression_ids(chromosome);
        let mut by_id: HashMap<usize, u64> = HashMap::new();
        (0..m.num_genes())
            .map(|i| *by_id.entry(ids[i]).or_insert_with(|| self.losses(m.gene(i))))
            .collect()
    }

    pub fn fitness<R: Rng + ?Sized>(&self, chromosome: &mut Chromosome, rng: &mut R) -> (f64, usize) {
        best_gene(self.gene_losses(chromosome, rng).into_iter().map(|l| l as f64))
    }
}

pub fn reference_f1(p: &[f64; 9]) -> f64 {
    ((p[4] - p[5] - (p[6] + p[5])) * p[8] + p[4] * p[3]) * (p[4] - p[7])
}

pub fn reference_f2(p: &[f64; 9]) -> f64 {
    p[2] - (p[8] * p[7] - p[4]) - p[7] - (p[2] * p[5])
}

pub fn reference_f3(p: &[f64; 9]) -> f64 {
    (p[4] * p[1] + p[2]) * p[7] - (p[1] - p[2] + p[7] * p[5]) - (p[8] - (p[3] * p[5]))
}
