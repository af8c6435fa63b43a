use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{Amplitude, DynamicsError, Generator};

/// Fixed-step RK4 settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegrateOptions {
    /// Upper bound on `h · ‖A‖_∞`.
    pub courant: f64,
    /// Growth threshold on watched modes.
    pub guard: f64,
    /// Optional absolute cap on the step.
    pub max_step: Option<f64>,
    /// Multiplies the number of substeps; 2 halves the step.
    pub refinement: usize,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        Self {
            courant: 0.05,
            guard: 1e12,
            max_step: None,
            refinement: 1,
        }
    }
}

impl IntegrateOptions {
    fn validate(&self) -> Result<(), DynamicsError> {
        if !(self.courant.is_finite() && self.courant > 0.0) {
            return Err(DynamicsError::BadOptions(format!("courant = {}", self.courant)));
        }
        if !(self.guard > 0.0) {
            return Err(DynamicsError::BadOptions(format!("guard = {}", self.guard)));
        }
        if matches!(self.max_step, Some(h) if !(h.is_finite() && h > 0.0)) {
            return Err(DynamicsError::BadOptions(format!("max_step = {:?}", self.max_step)));
        }
        if self.refinement == 0 {
            return Err(DynamicsError::BadOptions("refinement = 0".into()));
        }
        Ok(())
    }

    /// Number of RK4 steps across an output interval of length `dt`.
    pub fn substeps(&self, dt: f64, norm: f64) -> usize {
        let mut n = (dt * norm / self.courant).ceil().max(1.0);
        if let Some(h) = self.max_step {
            n = n.max((dt / h).ceil());
        }
        n as usize * self.refinement
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum TrajectoryStatus {
    Completed,
    /// A watched mode exceeded the guard (or any mode became non-finite) at
    /// the given output time; the trajectory stops there.
    UnstableGrowth { time: f64 },
}

/// Sampled solution of `v̇ = A v`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T> {
    pub labels: Vec<String>,
    pub times: Vec<f64>,
    /// One row per time, one column per mode.
    pub values: Vec<Vec<T>>,
    pub status: TrajectoryStatus,
    /// Largest RK4 step used.
    pub step: f64,
}

impl<T: Amplitude> Trajectory<T> {
    pub fn column(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn series(&self, col: usize) -> Vec<T> {
        self.values.iter().map(|row| row[col]).collect()
    }

    pub fn occupations(&self, col: usize) -> Vec<f64> {
        self.values.iter().map(|row| row[col].norm_sqr()).collect()
    }

    pub fn is_unstable(&self) -> bool {
        matches!(self.status, TrajectoryStatus::UnstableGrowth { .. })
    }

    /// Writes the selected columns as CSV with 15 significant digits.
    pub fn write_csv<W: Write>(&self, out: W, columns: &[usize]) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["time".to_string()];
        for &c in columns {
            header.extend(T::csv_header(&self.labels[c]));
        }
        w.write_record(&header)?;
        for (t, row) in self.times.iter().zip(&self.values) {
            let mut rec = vec![format_sig(*t)];
            for &c in columns {
                rec.extend(row[c].csv_values().into_iter().map(format_sig));
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Scientific notation with 15 significant digits.
pub fn format_sig(x: f64) -> String {
    format!("{x:.14e}")
}

fn check_times(times: &[f64]) -> Result<(), DynamicsError> {
    let ordered = times.windows(2).all(|w| w[1] > w[0]);
    if times.is_empty() || times[0] != 0.0 || !ordered || times.iter().any(|t| !t.is_finite()) {
        return Err(DynamicsError::BadTimes);
    }
    Ok(())
}

struct Rk4<T> {
    k1: Vec<T>,
    k2: Vec<T>,
    k3: Vec<T>,
    k4: Vec<T>,
    tmp: Vec<T>,
}

impl<T: Amplitude> Rk4<T> {
    fn new(n: usize) -> Self {
        let z = vec![T::default(); n];
        Self {
            k1: z.clone(),
            k2: z.clone(),
            k3: z.clone(),
            k4: z.clone(),
            tmp: z,
        }
    }

    fn step(&mut self, gen: &Generator<T>, v: &mut [T], h: f64) {
        let n = v.len();
        gen.apply(v, &mut self.k1);
        for i in 0..n {
            self.tmp[i] = v[i] + self.k1[i] * (0.5 * h);
        }
        gen.apply(&self.tmp, &mut self.k2);
        for i in 0..n {
            self.tmp[i] = v[i] + self.k2[i] * (0.5 * h);
        }
        gen.apply(&self.tmp, &mut self.k3);
        for i in 0..n {
            self.tmp[i] = v[i] + self.k3[i] * h;
        }
        gen.apply(&self.tmp, &mut self.k4);
        let sixth = h / 6.0;
        for i in 0..n {
            v[i] += (self.k1[i] + (self.k2[i] + self.k3[i]) * 2.0 + self.k4[i]) * sixth;
        }
    }
}

/// Integrates `v̇ = A v` from `initial` and samples at `times`.
///
/// Each output interval is split into equal RK4 steps with
/// `h · ‖A‖_∞ ≤ courant`. Integration stops at the first output time where a
/// watched mode exceeds `guard` or any mode is non-finite.
pub fn integrate<T: Amplitude>(
    gen: &Generator<T>,
    initial: &[T],
    times: &[f64],
    opts: &IntegrateOptions,
) -> Result<Trajectory<T>, DynamicsError> {
    opts.validate()?;
    check_times(times)?;
    if initial.len() != gen.dimension() {
        return Err(DynamicsError::InitialLength {
            expected: gen.dimension(),
            got: initial.len(),
        });
    }
    let norm = gen.row_sum_norm();
    let mut v = initial.to_vec();
    let mut rk = Rk4::new(v.len());
    let mut values = vec![v.clone()];
    let mut status = TrajectoryStatus::Completed;
    let mut max_h: f64 = 0.0;
    for w in times.windows(2) {
        let dt = w[1] - w[0];
        let n = opts.substeps(dt, norm);
        let h = dt / n as f64;
        max_h = max_h.max(h);
        for _ in 0..n {
            rk.step(gen, &mut v, h);
        }
        values.push(v.clone());
        let overflow = gen.watched().iter().any(|&k| v[k].norm_sqr().sqrt() > opts.guard);
        if overflow || v.iter().any(|x| !x.is_finite()) {
            status = TrajectoryStatus::UnstableGrowth { time: w[1] };
            break;
        }
    }
    Ok(Trajectory {
        labels: gen.labels().to_vec(),
        times: times[..values.len()].to_vec(),
        values,
        status,
        step: max_h,
    })
}

/// Largest change of a watched-mode occupation when the step is halved,
/// relative to that mode's maximum occupation, over the samples both runs
/// reach before any overflow flag.
pub fn step_halving_deviation<T: Amplitude>(
    gen: &Generator<T>,
    initial: &[T],
    times: &[f64],
    opts: &IntegrateOptions,
) -> Result<f64, DynamicsError> {
    let coarse = integrate(gen, initial, times, opts)?;
    let fine_opts = IntegrateOptions {
        refinement: opts.refinement * 2,
        ..*opts
    };
    let fine = integrate(gen, initial, times, &fine_opts)?;
    let rows = coarse.values.len().min(fine.values.len());
    let stable_rows = match (coarse.status, fine.status) {
        (TrajectoryStatus::Completed, TrajectoryStatus::Completed) => rows,
        _ => rows.saturating_sub(1),
    };
    let mut worst: f64 = 0.0;
    for &k in gen.watched() {
        let scale = fine.values[..stable_rows]
            .iter()
            .map(|r| r[k].norm_sqr())
            .fold(0.0, f64::max);
        if scale == 0.0 {
            continue;
        }
        for r in 0..stable_rows {
            let d = (coarse.values[r][k].norm_sqr() - fine.values[r][k].norm_sqr()).abs();
            worst = worst.max(d / scale);
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use num_complex::Complex64;

    use super::*;
    use crate::dynamics::{build_amplitude_generator, uniform_lattice};
    use crate::model::EmitterSpec;

    fn grid(end: f64, n: usize) -> Vec<f64> {
        (0..=n).map(|k| end * k as f64 / n as f64).collect()
    }

    #[test]
    fn zero_generator_keeps_state() {
        let gen = Generator::<f64>::from_entries(vec!["u".into(), "v".into()], [], vec![0, 1]).unwrap();
        let traj = integrate(&gen, &[1.5, -2.0], &grid(3.0, 6), &IntegrateOptions::default()).unwrap();
        assert!(traj.values.iter().all(|r| r == &vec![1.5, -2.0]));
    }

    #[test]
    fn decoupled_emitter_rotates() {
        let lat = uniform_lattice(6, 2.0, 1.0, 0.0);
        let e = EmitterSpec::small("c", 1.0, 2, 0.0);
        let gen = build_amplitude_generator(&lat, &[e]).unwrap();
        let mut init = vec![Complex64::default(); 7];
        init[0] = Complex64::new(1.0, 0.0);
        let traj = integrate(&gen, &init, &grid(10.0, 100), &IntegrateOptions::default()).unwrap();
        let last = traj.values.last().unwrap()[0];
        assert!((last - Complex64::from_polar(1.0, -10.0)).norm() < 1e-8);
        assert_eq!(traj.values[0], init);
        // RK4 damps a pure rotation by O(T h⁵); a finer step keeps the
        // occupation constant to 1e-12.
        let fine = IntegrateOptions {
            courant: 0.01,
            ..Default::default()
        };
        let traj = integrate(&gen, &init, &grid(10.0, 100), &fine).unwrap();
        for o in traj.occupations(0) {
            assert!((o - 1.0).abs() < 1e-12, "{o}");
        }
    }

    #[test]
    fn guard_stops_growth() {
        let gen = Generator::<f64>::from_entries(vec!["u".into()], [(0, 0, 1.0)], vec![0]).unwrap();
        let opts = IntegrateOptions {
            guard: 1e3,
            ..Default::default()
        };
        let traj = integrate(&gen, &[1.0], &grid(20.0, 20), &opts).unwrap();
        assert_eq!(traj.status, TrajectoryStatus::UnstableGrowth { time: 7.0 });
        assert_eq!(traj.times.len(), traj.values.len());
        assert_eq!(*traj.times.last().unwrap(), 7.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        let gen = Generator::<f64>::from_entries(vec!["u".into()], [], vec![0]).unwrap();
        let opts = IntegrateOptions::default();
        assert!(integrate(&gen, &[1.0, 2.0], &[0.0, 1.0], &opts).is_err());
        assert!(integrate(&gen, &[1.0], &[0.5, 1.0], &opts).is_err());
        assert!(integrate(&gen, &[1.0], &[0.0, 1.0, 1.0], &opts).is_err());
    }

    #[test]
    fn csv_layout() {
        let gen = Generator::<Complex64>::from_entries(vec!["c".into()], [], vec![0]).unwrap();
        let traj = integrate(&gen, &[Complex64::new(0.5, -0.25)], &[0.0, 1.0], &IntegrateOptions::default()).unwrap();
        let mut buf = Vec::new();
        traj.write_csv(&mut buf, &[0]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("time,c_re,c_im"));
        assert_eq!(
            lines.next(),
            Some("0.00000000000000e0,5.00000000000000e-1,-2.50000000000000e-1")
        );
    }

    #[test]
    fn halving_converges_for_small_emitter() {
        let lat = uniform_lattice(60, 15.0, 5.0, 0.0);
        let gen = build_amplitude_generator(&lat, &[EmitterSpec::small("c", 0.0, 30, 1.0)]).unwrap();
        let mut init = vec![Complex64::default(); 61];
        init[0] = Complex64::new(1.0, 0.0);
        let dev = step_halving_deviation(&gen, &init, &grid(5.0, 20), &IntegrateOptions::default()).unwrap();
        assert!(dev < 1e-6, "{dev}");
    }
}
