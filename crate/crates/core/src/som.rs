//! Kohonen self-organising map on a hexagonal lattice.
//!
//! Training is online: each epoch presents every profile once in a seeded
//! shuffled order. The learning rate and the Gaussian neighbourhood width
//! both decay linearly from their start to their end values across all
//! presentations.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kmeans::squared_distance;
use crate::model::{AsHourly, ClusteringResult, Hourly, MeanLoadProfile, Method, MethodParams, SomGrid};

pub const DEFAULT_EPOCHS: usize = 500;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SomParams {
    pub width: usize,
    pub height: usize,
    pub epochs: usize,
    pub lr_start: f64,
    pub lr_end: f64,
    pub radius_start: f64,
    pub radius_end: f64,
    pub seed: u64,
}

impl SomParams {
    pub fn new(width: usize, height: usize, seed: u64) -> Self {
        Self {
            width,
            height,
            epochs: DEFAULT_EPOCHS,
            lr_start: 0.5,
            lr_end: 0.01,
            radius_start: (width.max(height) as f64 / 2.0).max(1.0),
            radius_end: 1.0,
            seed,
        }
    }

    pub fn with_epochs(mut self, epochs: usize) -> Self {
        self.epochs = epochs;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::Parameter(format!("grid {}x{} must have positive sides", self.width, self.height)));
        }
        if !(self.lr_start > self.lr_end && self.lr_end > 0.0 && self.lr_start <= 1.0) {
            return Err(Error::Parameter(format!(
                "learning rates must satisfy 1 >= lr_start > lr_end > 0 (got {} and {})",
                self.lr_start, self.lr_end
            )));
        }
        if !(self.radius_start >= self.radius_end && self.radius_end > 0.0) {
            return Err(Error::Parameter(format!(
                "radii must satisfy radius_start >= radius_end > 0 (got {} and {})",
                self.radius_start, self.radius_end
            )));
        }
        Ok(())
    }
}

/// Index of the nearest codebook; ties go to the lowest row-major index.
pub fn bmu(grid: &SomGrid, profile: &Hourly) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, w) in grid.codebooks().iter().enumerate() {
        let d = squared_distance(profile, w);
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    best
}

/// Moves every codebook toward `sample` by `lr * exp(-d^2 / (2 radius^2))`,
/// with `d` the lattice distance from `winner`.
pub fn update(grid: &mut SomGrid, sample: &Hourly, winner: usize, lr: f64, radius: f64) {
    let denom = 2.0 * radius * radius;
    let weights: Vec<f64> = (0..grid.len())
        .map(|j| {
            let d = grid.node_distance(winner, j);
            lr * (-d * d / denom).exp()
        })
        .collect();
    for (w, h) in grid.codebooks_mut().iter_mut().zip(weights) {
        for (wi, xi) in w.iter_mut().zip(sample) {
            *wi += h * (xi - *wi);
        }
    }
}

/// Stepwise trainer; `train_som` drives it for the configured epochs.
pub struct SomTrainer {
    grid: SomGrid,
    params: SomParams,
    rng: ChaCha8Rng,
    step: usize,
    total: usize,
    neighbour: Vec<f64>,
}

impl SomTrainer {
    /// Starts from `initial`; `n_samples` fixes the schedule length.
    pub fn new(initial: SomGrid, params: &SomParams, n_samples: usize) -> Result<Self> {
        params.validate()?;
        if initial.width() != params.width || initial.height() != params.height {
            return Err(Error::Parameter("initial grid does not match the parameter dimensions".into()));
        }
        let n = initial.len();
        let mut neighbour = vec![0.0; n * n];
        for a in 0..n {
            for b in 0..n {
                let d = initial.node_distance(a, b);
                neighbour[a * n + b] = d * d;
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        rng.set_stream(1);
        Ok(Self {
            grid: initial,
            params: params.clone(),
            rng,
            step: 0,
            total: params.epochs * n_samples,
            neighbour,
        })
    }

    fn schedule(&self) -> (f64, f64) {
        let frac = if self.total > 1 {
            (self.step as f64 / (self.total - 1) as f64).min(1.0)
        } else {
            0.0
        };
        let p = &self.params;
        (
            p.lr_start + (p.lr_end - p.lr_start) * frac,
            p.radius_start + (p.radius_end - p.radius_start) * frac,
        )
    }

    /// Presents every profile once in shuffled order.
    pub fn run_epoch<P: AsHourly>(&mut self, profiles: &[P]) {
        let mut order: Vec<usize> = (0..profiles.len()).collect();
        order.shuffle(&mut self.rng);
        let n = self.grid.len();
        for i in order {
            let x = profiles[i].hourly();
            let (lr, radius) = self.schedule();
            let winner = bmu(&self.grid, x);
            let denom = 2.0 * radius * radius;
            let row = &self.neighbour[winner * n..(winner + 1) * n];
            for (w, d2) in self.grid.codebooks_mut().iter_mut().zip(row) {
                let h = lr * (-d2 / denom).exp();
                for (wi, xi) in w.iter_mut().zip(x) {
                    *wi += h * (xi - *wi);
                }
            }
            self.step += 1;
        }
    }

    pub fn grid(&self) -> &SomGrid {
        &self.grid
    }

    pub fn into_grid(self) -> SomGrid {
        self.grid
    }
}

/// Codebooks drawn from the profiles with replacement.
pub fn initial_grid<P: AsHourly>(profiles: &[P], params: &SomParams) -> Result<SomGrid> {
    if profiles.is_empty() {
        return Err(Error::Parameter("cannot train a SOM on zero profiles".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let codebooks = (0..params.width * params.height)
        .map(|_| *profiles[rng.random_range(0..profiles.len())].hourly())
        .collect();
    SomGrid::new(params.width, params.height, codebooks)
}

pub fn train_som<P: AsHourly>(profiles: &[P], params: &SomParams) -> Result<SomGrid> {
    params.validate()?;
    let grid = initial_grid(profiles, params)?;
    let mut trainer = SomTrainer::new(grid, params, profiles.len())?;
    for _ in 0..params.epochs {
        trainer.run_epoch(profiles);
    }
    Ok(trainer.into_grid())
}

/// Trains a grid and uses its nodes as clusters; centroids are member means.
pub fn som_cluster(profiles: &[MeanLoadProfile], params: &SomParams) -> Result<(ClusteringResult, SomGrid)> {
    let grid = train_som(profiles, params)?;
    let assignments = profiles.iter().map(|p| bmu(&grid, p.hourly())).collect();
    let result = ClusteringResult::from_assignments(
        Method::Som,
        grid.len(),
        profiles.iter().map(|p| p.household_id.clone()).collect(),
        assignments,
        profiles,
        grid.codebooks(),
        params.seed,
        MethodParams::Som(params.clone()),
    )?;
    Ok((result, grid))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::HOURS;

    fn grid_of(width: usize, height: usize, f: impl Fn(usize) -> Hourly) -> SomGrid {
        SomGrid::new(width, height, (0..width * height).map(f).collect()).unwrap()
    }

    #[test]
    fn bmu_exact_match() {
        let grid = grid_of(3, 3, |i| [i as f64 * 10.0; HOURS]);
        assert_eq!(bmu(&grid, &[40.0; HOURS]), 4);
    }

    #[test]
    fn bmu_ties_go_to_lowest_index() {
        let grid = grid_of(3, 3, |_| [0.5; HOURS]);
        assert_eq!(bmu(&grid, &[0.1; HOURS]), 0);

        let grid = grid_of(3, 3, |i| match i {
            2 => [0.25; HOURS],
            5 => [0.75; HOURS],
            _ => [5.0; HOURS],
        });
        assert_eq!(bmu(&grid, &[0.5; HOURS]), 2);
    }

    #[test]
    fn zero_epochs_keeps_sampled_codebooks() {
        let profiles: Vec<Hourly> = (0..5).map(|i| [i as f64 / 5.0; HOURS]).collect();
        let params = SomParams::new(3, 3, 9).with_epochs(0);
        let trained = train_som(&profiles, &params).unwrap();
        assert_eq!(trained, initial_grid(&profiles, &params).unwrap());
        for w in trained.codebooks() {
            assert!(profiles.contains(w));
        }
    }

    #[test]
    fn single_profile_attracts_every_codebook() {
        let mut target = [0.1; HOURS];
        target[8] = 1.0;
        target[19] = 0.8;
        let params = SomParams::new(3, 3, 5).with_epochs(40);
        let start = grid_of(3, 3, |i| [(i as f64 + 1.0) / 10.0; HOURS]);
        let mut trainer = SomTrainer::new(start, &params, 1).unwrap();
        let worst = |g: &SomGrid| {
            g.codebooks()
                .iter()
                .map(|w| squared_distance(w, &target).sqrt())
                .fold(0.0, f64::max)
        };
        let initial = worst(trainer.grid());
        let mut prev = initial;
        for _ in 0..params.epochs {
            trainer.run_epoch(&[target]);
            let now = worst(trainer.grid());
            assert!(now < prev, "{now} !< {prev}");
            prev = now;
        }
        assert!(prev < initial / 2.0);
    }

    #[test]
    fn update_moves_winner_closer() {
        let mut grid = grid_of(3, 3, |i| [i as f64 / 9.0; HOURS]);
        let x = [0.9; HOURS];
        let before = squared_distance(&grid.codebooks()[4], &x);
        update(&mut grid, &x, 4, 0.3, 1.0);
        let after = squared_distance(&grid.codebooks()[4], &x);
        assert!(after < before);
    }

    #[test]
    fn rejects_bad_schedules() {
        let mut p = SomParams::new(3, 3, 0);
        p.lr_end = 0.6;
        assert!(p.validate().is_err());
        let mut p = SomParams::new(3, 3, 0);
        p.radius_end = 0.0;
        assert!(p.validate().is_err());
        assert!(train_som::<Hourly>(&[], &SomParams::new(3, 3, 0)).is_err());
    }

    #[test]
    fn deterministic_given_seed() {
        let profiles: Vec<Hourly> = (0..20).map(|i| [((i * 7) % 11) as f64 / 11.0; HOURS]).collect();
        let p = SomParams::new(4, 3, 21).with_epochs(30);
        assert_eq!(train_som(&profiles, &p).unwrap(), train_som(&profiles, &p).unwrap());
    }
}
