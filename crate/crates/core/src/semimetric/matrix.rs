use std::io::Write;

use rayon::prelude::*;

use super::Semimetric;
use crate::dynsys::{apply, Point, PointSample, SystemSpec};
use crate::error::{Error, Result};

/// Symmetric matrix of semimetric values on a point sample, zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    m: usize,
    values: Vec<f64>,
    /// Seed of the sample the rows refer to, when known.
    pub sample_seed: Option<u64>,
}

impl DistanceMatrix {
    /// Validates a row-major list of rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let m = rows.len();
        if rows.iter().any(|r| r.len() != m) {
            return Err(Error::Size("distance matrix must be square".into()));
        }
        let values: Vec<f64> = rows.iter().flatten().copied().collect();
        let d = DistanceMatrix {
            m,
            values,
            sample_seed: None,
        };
        d.validate()?;
        Ok(d)
    }

    /// Builds from a function on index pairs `i < j`, mirrored.
    pub fn from_fn(m: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let mut values = vec![0.0; m * m];
        for i in 0..m {
            for j in i + 1..m {
                let v = f(i, j);
                values[i * m + j] = v;
                values[j * m + i] = v;
            }
        }
        let d = DistanceMatrix {
            m,
            values,
            sample_seed: None,
        };
        d.validate()?;
        Ok(d)
    }

    fn from_values(m: usize, values: Vec<f64>, seed: Option<u64>) -> Result<Self> {
        let d = DistanceMatrix {
            m,
            values,
            sample_seed: seed,
        };
        d.validate()?;
        Ok(d)
    }

    fn validate(&self) -> Result<()> {
        let m = self.m;
        for i in 0..m {
            if self.values[i * m + i] != 0.0 {
                return Err(Error::Data(format!("nonzero diagonal entry at {i}")));
            }
            for j in i + 1..m {
                let v = self.values[i * m + j];
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::Data(format!("entry ({i},{j}) = {v} is not a finite nonnegative value")));
                }
                if v != self.values[j * m + i] {
                    return Err(Error::Data(format!("entries ({i},{j}) and ({j},{i}) differ")));
                }
            }
        }
        Ok(())
    }

    pub fn size(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.m + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.m..(i + 1) * self.m]
    }

    pub fn max_entry(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Every entry multiplied by `c > 0`.
    pub fn scaled(&self, c: f64) -> DistanceMatrix {
        DistanceMatrix {
            m: self.m,
            values: self.values.iter().map(|v| v * c).collect(),
            sample_seed: self.sample_seed,
        }
    }

    /// Principal submatrix on the given indices.
    pub fn restrict(&self, idx: &[usize]) -> DistanceMatrix {
        let k = idx.len();
        let mut values = Vec::with_capacity(k * k);
        for &i in idx {
            for &j in idx {
                values.push(self.get(i, j));
            }
        }
        DistanceMatrix {
            m: k,
            values,
            sample_seed: self.sample_seed,
        }
    }

    /// `m` lines of `m` comma-separated values with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for i in 0..self.m {
            let line: Vec<String> = self.row(i).iter().map(|v| format!("{v:.16e}")).collect();
            writeln!(out, "{}", line.join(","))?;
        }
        Ok(())
    }
}

/// Values of `rho` on all pairs of `points`, row-major with zero diagonal.
///
/// Orbit averages and pull-backs advance the whole point set instead of
/// re-deriving each orbit per pair; every entry receives exactly the same
/// floating-point operations as `rho.eval` on that pair.
pub(crate) fn matrix_values(rho: &Semimetric, points: &[Point]) -> Result<Vec<f64>> {
    match rho {
        Semimetric::Average { inner, system, n } => {
            let mut snaps = orbit_average_values(inner, system, points, &[*n])?;
            Ok(snaps.pop().expect("one snapshot per schedule entry"))
        }
        Semimetric::PullBack { inner, system, steps } => {
            let moved = points
                .par_iter()
                .map(|p| apply(system, p, *steps))
                .collect::<Result<Vec<_>>>()?;
            matrix_values(inner, &moved)
        }
        Semimetric::Cutoff { inner, level } => {
            let mut v = matrix_values(inner, points)?;
            v.iter_mut().for_each(|x| *x = x.min(*level));
            Ok(v)
        }
        Semimetric::Combination { terms } => {
            let mut acc = vec![0.0; points.len() * points.len()];
            for t in terms {
                let v = matrix_values(&t.metric, points)?;
                acc.iter_mut().zip(&v).for_each(|(a, b)| *a += t.weight * b);
            }
            Ok(acc)
        }
        _ => pairwise(rho, points),
    }
}

fn pairwise(rho: &Semimetric, points: &[Point]) -> Result<Vec<f64>> {
    let m = points.len();
    let mut values = vec![0.0; m * m];
    values
        .par_chunks_mut(m.max(1))
        .enumerate()
        .try_for_each(|(i, row)| -> Result<()> {
            for j in i + 1..m {
                row[j] = rho.eval(&points[i], &points[j])?;
            }
            Ok(())
        })?;
    for i in 0..m {
        for j in i + 1..m {
            values[j * m + i] = values[i * m + j];
        }
    }
    Ok(values)
}

/// Snapshots of the running orbit average at each length in `schedule`
/// (strictly increasing, all `>= 1`).
fn orbit_average_values(
    inner: &Semimetric,
    system: &SystemSpec,
    points: &[Point],
    schedule: &[usize],
) -> Result<Vec<Vec<f64>>> {
    if schedule.is_empty() || schedule[0] == 0 || schedule.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Precondition(
            "averaging schedule must be strictly increasing and start at >= 1".into(),
        ));
    }
    let m = points.len();
    let last = *schedule.last().unwrap();
    let mut states = points.to_vec();
    let mut acc = vec![0.0; m * m];
    let mut snaps = Vec::with_capacity(schedule.len());
    let mut next = schedule.iter().peekable();
    for k in 0..last {
        if k > 0 {
            states = states
                .par_iter()
                .map(|p| system.step(p))
                .collect::<Result<Vec<_>>>()?;
        }
        let v = matrix_values(inner, &states)?;
        acc.par_iter_mut().zip(v.par_iter()).for_each(|(a, b)| *a += b);
        if next.peek() == Some(&&(k + 1)) {
            next.next();
            let denom = (k + 1) as f64;
            snaps.push(acc.iter().map(|s| s / denom).collect());
        }
    }
    Ok(snaps)
}

/// `D[i][j] = rho(p_i, p_j)` on the sample.
pub fn distance_matrix(rho: &Semimetric, sample: &PointSample) -> Result<DistanceMatrix> {
    let values = matrix_values(rho, &sample.points)?;
    DistanceMatrix::from_values(sample.len(), values, Some(sample.seed))
}

/// Distance matrices of the orbit averages of `rho` for every length in
/// `schedule`, sharing one pass over the orbits.
pub fn averaged_distance_matrices(
    rho: &Semimetric,
    system: &SystemSpec,
    sample: &PointSample,
    schedule: &[usize],
) -> Result<Vec<DistanceMatrix>> {
    orbit_average_values(rho, system, &sample.points, schedule)?
        .into_iter()
        .map(|v| DistanceMatrix::from_values(sample.len(), v, Some(sample.seed)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynsys::sample_points;
    use crate::semimetric::{average_metric, cutoff, Partition};

    fn manual(system: SystemSpec, xs: &[f64]) -> PointSample {
        PointSample {
            system,
            seed: 0,
            horizon: 0,
            points: xs.iter().map(|&x| Point::Interval(x)).collect(),
        }
    }

    #[test]
    fn single_point_matrix() {
        let s = manual(SystemSpec::Identity, &[0.3]);
        let d = distance_matrix(&Semimetric::Euclidean1D, &s).unwrap();
        assert_eq!(d.size(), 1);
        assert_eq!(d.get(0, 0), 0.0);
    }

    #[test]
    fn hand_computed_matrix() {
        let s = manual(SystemSpec::Identity, &[0.0, 0.5, 1.0]);
        let d = distance_matrix(&Semimetric::Euclidean1D, &s).unwrap();
        let expected = [[0.0, 0.5, 1.0], [0.5, 0.0, 0.5], [1.0, 0.5, 0.0]];
        for (i, row) in expected.iter().enumerate() {
            for (j, want) in row.iter().enumerate() {
                assert_eq!(d.get(i, j), *want);
            }
        }
    }

    #[test]
    fn streamed_average_matches_lazy_bitwise() {
        let sys = SystemSpec::rotation();
        let s = sample_points(&sys, 24, 5, 0).unwrap();
        let rho = cutoff(&Semimetric::Euclidean1D, 0.4).unwrap();
        let avg = average_metric(&rho, &sys, 37).unwrap();
        let d = distance_matrix(&avg, &s).unwrap();
        for i in 0..s.len() {
            for j in 0..s.len() {
                let lazy = if i == j { 0.0 } else { avg.eval(&s.points[i], &s.points[j]).unwrap() };
                assert_eq!(d.get(i, j).to_bits(), lazy.to_bits());
            }
        }
    }

    #[test]
    fn streamed_shift_average_is_hamming() {
        let sys = SystemSpec::fair_coin();
        let s = sample_points(&sys, 2, 9, 40).unwrap();
        let avg = average_metric(&Semimetric::FirstSymbolCut, &sys, 40).unwrap();
        let d = distance_matrix(&avg, &s).unwrap();
        let (Point::Symbols(u), Point::Symbols(v)) = (&s.points[0], &s.points[1]) else {
            panic!("symbolic sample expected")
        };
        let hamming = u.as_slice().iter().zip(v.as_slice()).filter(|(a, b)| a != b).count();
        assert_eq!(d.get(0, 1), hamming as f64 / 40.0);
    }

    #[test]
    fn schedule_snapshots_match_single_runs() {
        let sys = SystemSpec::fair_coin();
        let rho = Semimetric::Block {
            partition: Partition::Cylinder { length: 2 },
        };
        let s = sample_points(&sys, 16, 2, 33).unwrap();
        let snaps = averaged_distance_matrices(&rho, &sys, &s, &[4, 16, 32]).unwrap();
        for (snap, n) in snaps.iter().zip([4, 16, 32]) {
            let single = distance_matrix(&average_metric(&rho, &sys, n).unwrap(), &s).unwrap();
            assert_eq!(snap, &single);
        }
        assert!(averaged_distance_matrices(&rho, &sys, &s, &[33]).is_err());
    }

    #[test]
    fn csv_has_seventeen_digits() {
        let s = manual(SystemSpec::Identity, &[0.0, 0.1]);
        let d = distance_matrix(&Semimetric::Euclidean1D, &s).unwrap();
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let first = text.lines().next().unwrap();
        assert_eq!(first, "0.0000000000000000e0,1.0000000000000001e-1");
        let parsed: f64 = first.split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(parsed, 0.1);
    }

    #[test]
    fn rejects_bad_rows() {
        assert!(DistanceMatrix::from_rows(&[vec![0.0, 1.0], vec![2.0, 0.0]]).is_err());
        assert!(DistanceMatrix::from_rows(&[vec![0.0, -1.0], vec![-1.0, 0.0]]).is_err());
        assert!(DistanceMatrix::from_rows(&[vec![0.0, 1.0]]).is_err());
    }
}
