//! Detector tomography of single-qubit projectors from coincidence counts.
//!
//! Probe preparations are taken as ideal. Each antipodal probe pair fixes the
//! detection efficiency, so a projector row is normalized pairwise before inversion.

use std::io::Read;

use serde::Serialize;

use crate::error::{GmeError, Result};
use crate::linalg::{bloch_operator, herm_eig, ComplexMatrix, EigMode};
use crate::measurement::{bloch_norm, measurement_fidelity, Axis, BlochVector};
use crate::tol;

/// Polarization labels, in the order D, A, R, L, H, V.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Label {
    D,
    A,
    R,
    L,
    H,
    V,
}

/// Projector order of the table rows.
pub const PROJECTORS: [Label; 6] = [Label::D, Label::A, Label::R, Label::L, Label::H, Label::V];
/// Preparation order of the table columns.
pub const PREPARATIONS: [Label; 6] = [Label::H, Label::V, Label::D, Label::A, Label::R, Label::L];

impl Label {
    pub fn bloch(self) -> BlochVector {
        match self {
            Label::D => [1.0, 0.0, 0.0],
            Label::A => [-1.0, 0.0, 0.0],
            Label::R => [0.0, 1.0, 0.0],
            Label::L => [0.0, -1.0, 0.0],
            Label::H => [0.0, 0.0, 1.0],
            Label::V => [0.0, 0.0, -1.0],
        }
    }

    pub fn antipode(self) -> Label {
        match self {
            Label::D => Label::A,
            Label::A => Label::D,
            Label::R => Label::L,
            Label::L => Label::R,
            Label::H => Label::V,
            Label::V => Label::H,
        }
    }

    pub fn axis(self) -> Axis {
        match self {
            Label::D | Label::A => Axis::X,
            Label::R | Label::L => Axis::Y,
            Label::H | Label::V => Axis::Z,
        }
    }

    pub fn parse(s: &str) -> Option<Label> {
        match s {
            "D" => Some(Label::D),
            "A" => Some(Label::A),
            "R" => Some(Label::R),
            "L" => Some(Label::L),
            "H" => Some(Label::H),
            "V" => Some(Label::V),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::D => "D",
            Label::A => "A",
            Label::R => "R",
            Label::L => "L",
            Label::H => "H",
            Label::V => "V",
        }
    }
}

/// counts[row][col]: row = projector in `PROJECTORS` order, col = preparation in `PREPARATIONS` order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountTable {
    pub counts: [[u64; 6]; 6],
}

fn row_of(l: Label) -> usize {
    PROJECTORS.iter().position(|x| *x == l).unwrap()
}

fn col_of(l: Label) -> usize {
    PREPARATIONS.iter().position(|x| *x == l).unwrap()
}

impl CountTable {
    pub fn get(&self, projector: Label, prep: Label) -> u64 {
        self.counts[row_of(projector)][col_of(prep)]
    }

    /// CSV with header `prep_H,...,prep_L` (optionally preceded by a label column)
    /// and rows `proj_X,<six integers>`. Lines starting with `#` are ignored.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .has_headers(true)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let parse_err = |line: u64, column: usize, message: String| GmeError::Parse {
            line: line as usize,
            column,
            message,
        };
        let headers = rdr
            .headers()
            .map_err(|e| parse_err(1, 1, e.to_string()))?
            .clone();
        let hline = rdr.position().line();
        let fields: Vec<&str> = headers.iter().collect();
        let offset = if fields.len() == 7 { 1 } else { 0 };
        if fields.len() != 6 + offset {
            return Err(parse_err(hline, 1, format!("expected 6 preparation columns, found {}", fields.len())));
        }
        let mut col_map = [0usize; 6];
        for (k, f) in fields[offset..].iter().enumerate() {
            let lbl = f
                .strip_prefix("prep_")
                .and_then(Label::parse)
                .ok_or_else(|| parse_err(hline, k + offset + 1, format!("bad preparation header `{f}`")))?;
            col_map[k] = col_of(lbl);
        }
        let mut seen_cols = col_map.to_vec();
        seen_cols.sort_unstable();
        seen_cols.dedup();
        if seen_cols.len() != 6 {
            return Err(parse_err(hline, 1, "duplicate preparation column".into()));
        }
        let mut counts = [[0u64; 6]; 6];
        let mut seen = [false; 6];
        for rec in rdr.records() {
            let rec = rec.map_err(|e| {
                let line = e.position().map_or(0, |p| p.line());
                parse_err(line, 1, e.to_string())
            })?;
            let line = rec.position().map_or(0, |p| p.line());
            if rec.len() != 7 {
                return Err(parse_err(line, 1, format!("expected 7 fields, found {}", rec.len())));
            }
            let lbl = rec[0]
                .strip_prefix("proj_")
                .and_then(Label::parse)
                .ok_or_else(|| parse_err(line, 1, format!("bad projector label `{}`", &rec[0])))?;
            let r = row_of(lbl);
            if seen[r] {
                return Err(parse_err(line, 1, format!("duplicate row for projector {}", lbl.as_str())));
            }
            seen[r] = true;
            for k in 0..6 {
                counts[r][col_map[k]] = rec[k + 1]
                    .parse::<u64>()
                    .map_err(|e| parse_err(line, k + 2, format!("`{}`: {e}", &rec[k + 1])))?;
            }
        }
        if let Some(r) = seen.iter().position(|s| !s) {
            return Err(GmeError::Invalid(format!(
                "count table lacks projector {}",
                PROJECTORS[r].as_str()
            )));
        }
        Ok(Self { counts })
    }

    pub fn from_csv_str(s: &str) -> Result<Self> {
        Self::from_csv_reader(s.as_bytes())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("projector,prep_H,prep_V,prep_D,prep_A,prep_R,prep_L\n");
        for (r, p) in PROJECTORS.iter().enumerate() {
            out.push_str(&format!("proj_{}", p.as_str()));
            for c in 0..6 {
                out.push_str(&format!(",{}", self.counts[r][c]));
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ProjectorEstimate {
    pub projector: Label,
    /// Bloch vector of the trace-normalized element (I + a.sigma)/2 before clipping
    pub bloch: BlochVector,
    /// smallest eigenvalue of the unclipped element
    pub min_eigenvalue: f64,
    /// true when the unclipped element was not positive semidefinite
    pub clipped: bool,
    /// sqrt(<n|E|n>) with E the nearest positive semidefinite element; the reported value
    pub fidelity: f64,
    /// average two-outcome fidelity of {E, I - E} with E clipped to |a| <= 1
    pub average_fidelity: f64,
    /// 1/2 (N_pass(+n)/N_total(+n) + N_pass(-n)/N_total(-n)) over the projector pair
    pub pass_fail: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TomographyReport {
    pub projectors: Vec<ProjectorEstimate>,
}

impl TomographyReport {
    pub fn get(&self, l: Label) -> &ProjectorEstimate {
        &self.projectors[row_of(l)]
    }

    /// eps per basis (X, Y, Z): one minus the mean reported fidelity of the two projectors.
    pub fn basis_epsilons(&self) -> [f64; 3] {
        let mut eps = [0.0; 3];
        for (axis, (a, b)) in [(0, (Label::D, Label::A)), (1, (Label::R, Label::L)), (2, (Label::H, Label::V))] {
            eps[axis] = 1.0 - 0.5 * (self.get(a).fidelity + self.get(b).fidelity);
        }
        eps
    }
}

/// Solve the 4x4 least-squares problem p_c = e0 + e.r_c over the six probes.
fn invert_row(probs: &[f64; 6]) -> Result<[f64; 4]> {
    let mut ata = [[0.0f64; 4]; 4];
    let mut atb = [0.0f64; 4];
    for (c, prep) in PREPARATIONS.iter().enumerate() {
        let r = prep.bloch();
        let row = [1.0, r[0], r[1], r[2]];
        for i in 0..4 {
            atb[i] += row[i] * probs[c];
            for j in 0..4 {
                ata[i][j] += row[i] * row[j];
            }
        }
    }
    // Gaussian elimination with partial pivoting
    let mut m = ata;
    let mut b = atb;
    for k in 0..4 {
        let piv = (k..4).max_by(|&i, &j| m[i][k].abs().total_cmp(&m[j][k].abs())).unwrap();
        if m[piv][k].abs() < 1e-12 {
            return Err(GmeError::SingularInversion("probe set does not span the Bloch sphere".into()));
        }
        m.swap(k, piv);
        b.swap(k, piv);
        for i in (k + 1)..4 {
            let f = m[i][k] / m[k][k];
            for j in k..4 {
                m[i][j] -= f * m[k][j];
            }
            b[i] -= f * b[k];
        }
    }
    let mut x = [0.0; 4];
    for k in (0..4).rev() {
        let s: f64 = ((k + 1)..4).map(|j| m[k][j] * x[j]).sum();
        x[k] = (b[k] - s) / m[k][k];
    }
    Ok(x)
}

/// Per-projector fidelities from a complete count table.
pub fn fidelity_from_counts(table: &CountTable) -> Result<TomographyReport> {
    let t = tol::current();
    let mut projectors = Vec::with_capacity(6);
    for (r, proj) in PROJECTORS.iter().enumerate() {
        let row = &table.counts[r];
        let mut probs = [0.0; 6];
        for (c, prep) in PREPARATIONS.iter().enumerate() {
            let pair = row[c] + row[col_of(prep.antipode())];
            if pair == 0 {
                return Err(GmeError::ZeroCounts(format!(
                    "proj_{} with probes {}/{}",
                    proj.as_str(),
                    prep.as_str(),
                    prep.antipode().as_str()
                )));
            }
            probs[c] = row[c] as f64 / pair as f64;
        }
        let e = invert_row(&probs)?;
        // E = e0 I + e.sigma; pairwise normalization gives e0 = 1/2
        let scale = 0.5 / e[0];
        let a = [2.0 * e[1] * scale, 2.0 * e[2] * scale, 2.0 * e[3] * scale];
        let na = bloch_norm(a);
        let n = proj.bloch();
        let raw = element(a);
        let spec = herm_eig(&raw, EigMode::Full)?;
        let min_eigenvalue = spec.min();
        if min_eigenvalue < -t.tomo_negative {
            return Err(GmeError::Invalid(format!(
                "reconstructed element for proj_{} has eigenvalue {min_eigenvalue:.3e}",
                proj.as_str()
            )));
        }
        let clipped = min_eigenvalue < 0.0;
        // Frobenius-nearest PSD: drop the negative eigenvalue
        let lambda_max = spec.max();
        let overlap = if clipped {
            let u = [a[0] / na, a[1] / na, a[2] / na];
            lambda_max * 0.5 * (1.0 + dot(u, n))
        } else {
            0.5 * (1.0 + dot(a, n))
        };
        let unit = if na > 1.0 { [a[0] / na, a[1] / na, a[2] / na] } else { a };
        let plus = element(unit);
        let minus = &ComplexMatrix::identity(2) - &plus;
        let average_fidelity = measurement_fidelity(&plus, &minus, n)?;
        let partner = proj.antipode();
        let pass_plus = table.get(*proj, *proj) as f64
            / (table.get(*proj, *proj) + table.get(partner, *proj)) as f64;
        let pass_minus = table.get(partner, partner) as f64
            / (table.get(partner, partner) + table.get(*proj, partner)) as f64;
        projectors.push(ProjectorEstimate {
            projector: *proj,
            bloch: a,
            min_eigenvalue,
            clipped,
            fidelity: overlap.max(0.0).sqrt(),
            average_fidelity,
            pass_fail: 0.5 * (pass_plus + pass_minus),
        });
    }
    Ok(TomographyReport { projectors })
}

fn element(a: BlochVector) -> ComplexMatrix {
    (&ComplexMatrix::identity(2) + &bloch_operator(a)).scale(0.5)
}

fn dot(a: BlochVector, b: BlochVector) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Counts drawn from Poisson(n_per_prep * tr(E rho)) for projectors E with the given Bloch vectors.
pub fn synthetic_counts(
    elements: &[BlochVector; 6],
    n_per_prep: f64,
    rng: &mut impl rand::Rng,
) -> CountTable {
    use rand_distr::{Distribution, Poisson};
    let mut counts = [[0u64; 6]; 6];
    for r in 0..6 {
        for (c, prep) in PREPARATIONS.iter().enumerate() {
            let mean = n_per_prep * 0.5 * (1.0 + dot(elements[r], prep.bloch()));
            counts[r][c] = if mean <= 0.0 {
                0
            } else {
                Poisson::new(mean).unwrap().sample(rng) as u64
            };
        }
    }
    CountTable { counts }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ideal_elements() -> [BlochVector; 6] {
        PROJECTORS.map(|p| p.bloch())
    }

    #[test]
    fn ideal_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let table = synthetic_counts(&ideal_elements(), 1e6, &mut rng);
        let rep = fidelity_from_counts(&table).unwrap();
        for p in &rep.projectors {
            assert!((p.fidelity - 1.0).abs() < 2e-3, "{:?}", p);
            assert!((p.average_fidelity - 1.0).abs() < 2e-3);
            assert!((p.pass_fail - 1.0).abs() < 2e-3);
        }
    }

    #[test]
    fn tilted_round_trip_within_three_sigma() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let eps: f64 = 0.01;
        let q = 1.0 - 2.0 * eps;
        let s = (1.0 - q * q).sqrt();
        let mut el = ideal_elements();
        // tilt D toward R and A toward L
        el[0] = [q, s, 0.0];
        el[1] = [-q, -s, 0.0];
        let n = 2e5;
        let table = synthetic_counts(&el, n, &mut rng);
        let rep = fidelity_from_counts(&table).unwrap();
        let d = rep.get(Label::D);
        // a.n estimated from one probe pair of ~n events
        let sigma = 0.5 * ((1.0 - q * q) / n).sqrt();
        assert!((d.average_fidelity - (1.0 - eps)).abs() < 3.0 * sigma + 1e-12, "{}", d.average_fidelity);
        assert!((d.fidelity - (1.0 - eps).sqrt()).abs() < 3.0 * sigma);
    }

    #[test]
    fn csv_round_trip_and_errors() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let table = synthetic_counts(&ideal_elements(), 1e3, &mut rng);
        let back = CountTable::from_csv_str(&table.to_csv()).unwrap();
        assert_eq!(back, table);
        let bad = "projector,prep_H,prep_V,prep_D,prep_A,prep_R,prep_L\nproj_D,1,2,3,x,5,6\n";
        match CountTable::from_csv_str(bad) {
            Err(GmeError::Parse { line, column, .. }) => assert_eq!((line, column), (2, 5)),
            other => panic!("{other:?}"),
        }
        let short = "prep_H,prep_V,prep_D,prep_A,prep_R,prep_L\nproj_D,1,2,3,4,5,6\n";
        assert!(matches!(CountTable::from_csv_str(short), Err(GmeError::Invalid(_))));
    }

    #[test]
    fn empty_probe_pairs_are_rejected() {
        assert!(matches!(
            fidelity_from_counts(&CountTable { counts: [[0; 6]; 6] }),
            Err(GmeError::ZeroCounts(_))
        ));
    }
}
