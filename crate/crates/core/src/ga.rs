//! Genetic search for the base-station position.
//!
//! A candidate position is a 16-bit chromosome: eight bits of X followed by
//! eight bits of Y, most significant bit first. Each candidate is scored by
//! `abf`, the sum of distances to all live sensors, each divided by that
//! sensor's quantized residual energy `w` in `1..=10`. Low-energy sensors
//! therefore pull the base station toward themselves. The GA maximizes
//! `big_m - abf` with roulette selection, a per-coordinate two-cut
//! crossover and a two-bit flip mutation.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::GaError;
use crate::world::{distance, Field, Position};

/// Number of bits in a chromosome.
pub const GENOME_BITS: usize = 16;
const COORD_BITS: usize = 8;
const TIE_TOLERANCE: f64 = 1e-12;

/// A candidate base-station position, packed as `X << 8 | Y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Chromosome(u16);

impl Chromosome {
    pub const fn encode(x: u8, y: u8) -> Self {
        Self(((x as u16) << 8) | y as u16)
    }

    pub const fn from_raw(raw: u16) -> Self {
        Self(raw)
    }

    pub const fn raw(self) -> u16 {
        self.0
    }

    /// Unclamped `(X, Y)` values.
    pub const fn coords(self) -> (u8, u8) {
        ((self.0 >> 8) as u8, self.0 as u8)
    }

    /// Bit at genome position `i`, where 0..8 is X and 8..16 is Y, MSB first.
    pub fn bit(self, i: usize) -> bool {
        assert!(i < GENOME_BITS);
        (self.0 >> (GENOME_BITS - 1 - i)) & 1 == 1
    }

    pub fn flip(self, i: usize) -> Self {
        assert!(i < GENOME_BITS);
        Self(self.0 ^ (1 << (GENOME_BITS - 1 - i)))
    }

    pub fn hamming(self, other: Chromosome) -> u32 {
        (self.0 ^ other.0).count_ones()
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self(rng.gen())
    }
}

impl fmt::Display for Chromosome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (x, y) = self.coords();
        write!(f, "{x:08b}|{y:08b}")
    }
}

/// Parses 16 binary digits; `|`, `_` and whitespace are ignored.
impl FromStr for Chromosome {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let digits: Vec<char> = s
            .chars()
            .filter(|c| !matches!(c, '|' | '_') && !c.is_whitespace())
            .collect();
        if digits.len() != GENOME_BITS {
            return Err(format!("expected {GENOME_BITS} bits, got {}", digits.len()));
        }
        digits
            .iter()
            .try_fold(0u16, |acc, c| match c {
                '0' => Ok(acc << 1),
                '1' => Ok((acc << 1) | 1),
                other => Err(format!("invalid bit `{other}`")),
            })
            .map(Chromosome)
    }
}

/// Decodes to a field position. Raw values past the field edge are clamped
/// onto it, so every genome is a valid candidate.
pub fn decode(c: Chromosome, field: Field) -> Position {
    let (x, y) = c.coords();
    Position::new(
        f64::from(x).min(field.width),
        f64::from(y).min(field.height),
    )
}

/// A live sensor as the placement objective sees it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedSite {
    pub pos: Position,
    /// Quantized residual energy, `1..=10`.
    pub w: u8,
}

impl WeightedSite {
    pub fn new(pos: Position, w: u8) -> Self {
        assert!((1..=10).contains(&w), "site weight {w} outside 1..=10");
        Self { pos, w }
    }
}

/// Maps residual energy onto the integer scale `1..=10`: tenths of the
/// initial energy, rounded up.
pub fn weight_of(residual_energy: f64, initial_energy: f64) -> u8 {
    debug_assert!(residual_energy > 0.0 && initial_energy > 0.0);
    // tolerance keeps exact tenths (0.7 * 10 = 7.000000000000001) on their step
    let scaled = (10.0 * residual_energy / initial_energy - 1e-9).ceil();
    scaled.clamp(1.0, 10.0) as u8
}

/// Inverse-weight sum of distances from `candidate` to every site.
pub fn abf(candidate: Position, sites: &[WeightedSite]) -> Result<f64, GaError> {
    if sites.is_empty() {
        return Err(GaError::NoSites);
    }
    Ok(abf_unchecked(candidate, sites))
}

fn abf_unchecked(candidate: Position, sites: &[WeightedSite]) -> f64 {
    sites
        .iter()
        .map(|s| distance(candidate, s.pos) / f64::from(s.w))
        .sum()
}

pub fn fitness(candidate: Position, sites: &[WeightedSite], big_m: f64) -> Result<f64, GaError> {
    Ok(big_m - abf(candidate, sites)?)
}

/// Default fitness offset: strictly above any achievable `abf`, since every
/// weight is at least 1 and no distance exceeds the field diagonal.
pub fn default_big_m(site_count: usize, field: Field) -> f64 {
    site_count as f64 * std::f64::consts::SQRT_2 * field.width.max(field.height) + 1.0
}

/// Fitness-proportionate probabilities.
pub fn selection_probabilities(fitnesses: &[f64]) -> Result<Vec<f64>, GaError> {
    if fitnesses.is_empty() {
        return Err(GaError::EmptyPopulation);
    }
    if let Some((index, &value)) = fitnesses
        .iter()
        .enumerate()
        .find(|(_, f)| !(f.is_finite() && **f > 0.0))
    {
        return Err(GaError::NonPositiveFitness { index, value });
    }
    let total: f64 = fitnesses.iter().sum();
    Ok(fitnesses.iter().map(|f| f / total).collect())
}

/// Spins the wheel once: one uniform draw, inverted through the cumulative sum.
pub fn roulette_select<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    debug_assert!(!probs.is_empty());
    let spin: f64 = rng.gen();
    let mut cumulative = 0.0;
    for (i, p) in probs.iter().enumerate() {
        cumulative += p;
        if spin < cumulative {
            return i;
        }
    }
    // rounding left the cumulative sum a hair under 1
    probs
        .iter()
        .rposition(|p| *p > 0.0)
        .unwrap_or(probs.len() - 1)
}

/// Swaps the X bits from `cut_x` to the end of the X part and the Y bits
/// from `cut_y` to the end of the Y part. Cuts are in `1..=7`.
pub fn crossover_at(
    a: Chromosome,
    b: Chromosome,
    cut_x: usize,
    cut_y: usize,
) -> (Chromosome, Chromosome) {
    assert!((1..COORD_BITS).contains(&cut_x) && (1..COORD_BITS).contains(&cut_y));
    let mask = ((0xFFu16 >> cut_x) << 8) | (0xFFu16 >> cut_y);
    let swap = (a.0 ^ b.0) & mask;
    (Chromosome(a.0 ^ swap), Chromosome(b.0 ^ swap))
}

pub fn crossover<R: Rng + ?Sized>(
    a: Chromosome,
    b: Chromosome,
    rng: &mut R,
) -> (Chromosome, Chromosome) {
    let cut_x = rng.gen_range(1..COORD_BITS);
    let cut_y = rng.gen_range(1..COORD_BITS);
    crossover_at(a, b, cut_x, cut_y)
}

/// Flips genome bit `x_bit` (in `0..8`) and `y_bit` (in `8..16`).
pub fn mutate_at(c: Chromosome, x_bit: usize, y_bit: usize) -> Chromosome {
    assert!(x_bit < COORD_BITS && (COORD_BITS..GENOME_BITS).contains(&y_bit));
    c.flip(x_bit).flip(y_bit)
}

pub fn mutate<R: Rng + ?Sized>(c: Chromosome, rng: &mut R) -> Chromosome {
    let x_bit = rng.gen_range(0..COORD_BITS);
    let y_bit = rng.gen_range(COORD_BITS..GENOME_BITS);
    mutate_at(c, x_bit, y_bit)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaParams {
    pub population_size: usize,
    pub generations: usize,
    pub crossover_rate: f64,
    pub mutation_rate: f64,
    /// Fitness offset `m`. `None` derives it from the site count and field.
    pub big_m: Option<f64>,
    /// Best chromosomes copied unchanged into the next generation.
    pub elitism: usize,
    /// Recorded for completeness. Roulette selection has no use for it.
    pub roulette_probability: f64,
}

impl GaParams {
    /// Population and generation count both equal to the node count.
    pub fn for_nodes(n: usize) -> Self {
        Self {
            population_size: n.max(2),
            generations: n,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), crate::error::ConfigError> {
        use crate::error::ConfigError;
        if self.population_size < 2 {
            return Err(ConfigError::out_of_range(
                "ga_population",
                self.population_size,
                ">= 2",
            ));
        }
        for (key, v) in [
            ("ga_crossover_rate", self.crossover_rate),
            ("ga_mutation_rate", self.mutation_rate),
            ("ga_roulette_probability", self.roulette_probability),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(ConfigError::out_of_range(key, v, "[0, 1]"));
            }
        }
        if self.elitism >= self.population_size {
            return Err(ConfigError::out_of_range(
                "ga_elitism",
                self.elitism,
                "< ga_population",
            ));
        }
        if let Some(m) = self.big_m {
            if !(m.is_finite() && m > 0.0) {
                return Err(ConfigError::out_of_range("ga_big_m", m, "> 0"));
            }
        }
        Ok(())
    }
}

impl Default for GaParams {
    fn default() -> Self {
        Self {
            population_size: 200,
            generations: 200,
            crossover_rate: 0.80,
            mutation_rate: 0.09,
            big_m: None,
            elitism: 1,
            roulette_probability: 0.90,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaOutcome {
    pub chromosome: Chromosome,
    pub position: Position,
    pub abf: f64,
    /// Best-ever `abf` after the initial population and after each generation.
    pub history: Vec<f64>,
}

struct Scored {
    genome: Chromosome,
    abf: f64,
}

fn evaluate(pop: &[Chromosome], sites: &[WeightedSite], field: Field) -> Vec<Scored> {
    pop.iter()
        .map(|&genome| Scored {
            genome,
            abf: abf_unchecked(decode(genome, field), sites),
        })
        .collect()
}

/// Runs the generational loop and returns the best chromosome ever seen.
pub fn run_ga<R: Rng + ?Sized>(
    sites: &[WeightedSite],
    params: &GaParams,
    field: Field,
    rng: &mut R,
) -> Result<GaOutcome, GaError> {
    if sites.is_empty() {
        return Err(GaError::NoSites);
    }
    let big_m = params
        .big_m
        .unwrap_or_else(|| default_big_m(sites.len(), field));
    let pop_size = params.population_size.max(2);
    let elite = params.elitism.min(pop_size);

    let initial: Vec<Chromosome> = (0..pop_size).map(|_| Chromosome::random(rng)).collect();
    let mut scored = evaluate(&initial, sites, field);
    let mut best = best_of(&scored);
    let mut history = Vec::with_capacity(params.generations + 1);
    history.push(best.1);

    for _ in 0..params.generations {
        let fitnesses: Vec<f64> = scored.iter().map(|s| big_m - s.abf).collect();
        let probs = selection_probabilities(&fitnesses)?;

        let mut next = Vec::with_capacity(pop_size);
        if elite > 0 {
            let mut order: Vec<usize> = (0..scored.len()).collect();
            order.sort_by(|&i, &j| scored[i].abf.total_cmp(&scored[j].abf).then(i.cmp(&j)));
            next.extend(order.iter().take(elite).map(|&i| scored[i].genome));
        }
        while next.len() < pop_size {
            let a = scored[roulette_select(&probs, rng)].genome;
            let b = scored[roulette_select(&probs, rng)].genome;
            let (mut c1, mut c2) = if rng.gen::<f64>() < params.crossover_rate {
                crossover(a, b, rng)
            } else {
                (a, b)
            };
            if rng.gen::<f64>() < params.mutation_rate {
                c1 = mutate(c1, rng);
            }
            if rng.gen::<f64>() < params.mutation_rate {
                c2 = mutate(c2, rng);
            }
            next.push(c1);
            if next.len() < pop_size {
                next.push(c2);
            }
        }

        scored = evaluate(&next, sites, field);
        let gen_best = best_of(&scored);
        if gen_best.1 < best.1 {
            best = gen_best;
        }
        history.push(best.1);
    }

    Ok(GaOutcome {
        chromosome: best.0,
        position: decode(best.0, field),
        abf: best.1,
        history,
    })
}

fn best_of(scored: &[Scored]) -> (Chromosome, f64) {
    scored
        .iter()
        .fold((scored[0].genome, scored[0].abf), |acc, s| {
            if s.abf < acc.1 {
                (s.genome, s.abf)
            } else {
                acc
            }
        })
}

/// Global minimum of `abf` over every one of the 2^16 genomes. Ties, up to
/// a relative 1e-12, go to the smallest X, then the smallest Y.
pub fn exhaustive_oracle(sites: &[WeightedSite], field: Field) -> Result<(Position, f64), GaError> {
    if sites.is_empty() {
        return Err(GaError::NoSites);
    }
    let mut best: Option<(Position, f64)> = None;
    for raw in 0..=u16::MAX {
        let pos = decode(Chromosome(raw), field);
        let value = abf_unchecked(pos, sites);
        if best.is_none_or(|(_, b)| value < b - TIE_TOLERANCE * b.abs().max(1.0)) {
            best = Some((pos, value));
        }
    }
    Ok(best.expect("genome space is nonempty"))
}
