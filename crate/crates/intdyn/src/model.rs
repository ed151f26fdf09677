//! Domain types: exosystems, plants, gain sets, pole regions, and scenario
//! validation.
//!
//! Types here are plain data — construction never enforces cross-field
//! consistency, so that [`validate_scenario`] can *report* every mismatch in
//! one pass instead of failing on the first. Operations that consume these
//! types re-check the dimensions they rely on.

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;

/// Absolute tolerance for equality-style validation checks (e.g. a frozen
/// design matrix matching a constant plant matrix).
pub const VALIDATION_ABS_TOL: f64 = 1e-12;

// ---------------------------------------------------------------------------
// Exosystem
// ---------------------------------------------------------------------------

/// Autonomous signal model `ẇ = S w`, `ξ = Eᵀ w` producing one forcing
/// channel. `S` is m×m, `E` and `w0` have length m.
#[derive(Debug, Clone, PartialEq)]
pub struct Exosystem {
    pub s: DMatrix<f64>,
    pub e: DVector<f64>,
    pub w0: DVector<f64>,
}

impl Exosystem {
    /// Convenience constructor that rejects outright dimension mismatches.
    pub fn new(s: DMatrix<f64>, e: DVector<f64>, w0: DVector<f64>) -> Result<Self> {
        let exo = Exosystem { s, e, w0 };
        match exo.dim_errors() {
            errs if errs.is_empty() => Ok(exo),
            errs => Err(Error::DimensionMismatch(errs.join("; "))),
        }
    }

    /// State dimension m (rows of S).
    pub fn dim(&self) -> usize {
        self.s.nrows()
    }

    /// Output functional ξ = Eᵀ w.
    pub fn output(&self, w: &DVector<f64>) -> f64 {
        self.e.dot(w)
    }

    fn dim_errors(&self) -> Vec<String> {
        let mut errs = Vec::new();
        let m = self.s.nrows();
        if self.s.ncols() != m {
            errs.push(format!("S must be square, got {}x{}", m, self.s.ncols()));
        }
        if m == 0 {
            errs.push("S must have dimension >= 1".to_string());
        }
        if self.e.len() != m {
            errs.push(format!("E has length {}, expected {}", self.e.len(), m));
        }
        if self.w0.len() != m {
            errs.push(format!("w0 has length {}, expected {}", self.w0.len(), m));
        }
        errs
    }
}

// ---------------------------------------------------------------------------
// Time expressions for time-varying plant matrices
// ---------------------------------------------------------------------------

/// One sinusoidal term `amplitude * sin(omega * t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sine {
    pub amplitude: f64,
    pub omega: f64,
}

/// Closed-form scalar function of time: a constant plus a sum of sinusoids.
///
/// This is the full expression language for time-varying plant entries.
/// Keeping it closed-form (rather than user code) keeps scenario files
/// reproducible and serializable. Grammar per entry:
///
/// ```text
/// expr   := term (('+' | '-') term)*
/// term   := number | [number '*'] 'sin(' (number '*')? 't' ')'
/// ```
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TimeExpr {
    pub constant: f64,
    pub sines: Vec<Sine>,
}

impl TimeExpr {
    pub fn constant(c: f64) -> Self {
        TimeExpr {
            constant: c,
            sines: Vec::new(),
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let mut v = self.constant;
        for s in &self.sines {
            v += s.amplitude * (s.omega * t).sin();
        }
        v
    }

    pub fn is_constant(&self) -> bool {
        self.sines.is_empty()
    }

    /// Parse the grammar above. Whitespace is ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let compact: String = text.chars().filter(|c| !c.is_whitespace()).collect();
        if compact.is_empty() {
            return Err(Error::Config("empty time expression".to_string()));
        }
        // Split into signed terms at top-level '+' / '-'. A sign directly
        // after '(', '*', 'e'/'E' (exponent), another sign, or at the start
        // is unary and stays with its term.
        let bytes = compact.as_bytes();
        let mut terms: Vec<(f64, String)> = Vec::new();
        let mut start = 0usize;
        let mut sign = 1.0f64;
        let mut depth = 0i32;
        let mut i = 0usize;
        while i < bytes.len() {
            let c = bytes[i] as char;
            match c {
                '(' => depth += 1,
                ')' => depth -= 1,
                '+' | '-' if depth == 0 && i > start => {
                    let prev = bytes[i - 1] as char;
                    let binary = !matches!(prev, '(' | '*' | '+' | '-' | 'e' | 'E');
                    if binary {
                        terms.push((sign, compact[start..i].to_string()));
                        sign = if c == '-' { -1.0 } else { 1.0 };
                        start = i + 1;
                    }
                }
                _ => {}
            }
            i += 1;
        }
        if depth != 0 {
            return Err(Error::Config(format!("unbalanced parentheses in '{text}'")));
        }
        terms.push((sign, compact[start..].to_string()));

        let mut expr = TimeExpr::default();
        for (s, term) in terms {
            if term.is_empty() {
                return Err(Error::Config(format!("dangling operator in '{text}'")));
            }
            expr.accumulate(s, &term, text)?;
        }
        Ok(expr)
    }

    fn accumulate(&mut self, sign: f64, term: &str, whole: &str) -> Result<()> {
        let parse_num = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|_| Error::Config(format!("bad number '{s}' in time expression '{whole}'")))
        };
        if let Some(pos) = term.find("sin(") {
            if !term.ends_with(')') {
                return Err(Error::Config(format!(
                    "malformed sin() term '{term}' in '{whole}'"
                )));
            }
            let prefix = &term[..pos];
            let amplitude = if prefix.is_empty() {
                1.0
            } else if prefix == "-" {
                -1.0
            } else if let Some(coef) = prefix.strip_suffix('*') {
                parse_num(coef)?
            } else {
                return Err(Error::Config(format!(
                    "sin() coefficient must be written as 'c*sin(...)' in '{whole}'"
                )));
            };
            let inner = &term[pos + 4..term.len() - 1];
            let omega = if inner == "t" {
                1.0
            } else if let Some(coef) = inner.strip_suffix("*t") {
                parse_num(coef)?
            } else {
                return Err(Error::Config(format!(
                    "sin() argument must be 't' or 'w*t', got '{inner}' in '{whole}'"
                )));
            };
            self.sines.push(Sine {
                amplitude: sign * amplitude,
                omega,
            });
        } else {
            self.constant += sign * parse_num(term)?;
        }
        Ok(())
    }
}

impl std::fmt::Display for TimeExpr {
    /// Canonical form whose floats round-trip exactly through `parse`.
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.sines.is_empty() {
            return write!(f, "{}", self.constant);
        }
        let mut first = true;
        if self.constant != 0.0 {
            write!(f, "{}", self.constant)?;
            first = false;
        }
        for s in &self.sines {
            if !first {
                write!(f, " + ")?;
            }
            write!(f, "{}*sin({}*t)", s.amplitude, s.omega)?;
            first = false;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Plant
// ---------------------------------------------------------------------------

/// System matrix of the plant: constant, or entry-wise closed-form in time.
#[derive(Debug, Clone, PartialEq)]
pub enum PlantMatrix {
    Constant(DMatrix<f64>),
    /// Row-major n×n grid of time expressions.
    Varying(Vec<Vec<TimeExpr>>),
}

/// The unstable system `η̇ = A(t) η + Σ_k N_k ξ_k` whose bounded solution is
/// sought. `frozen_a` is the constant matrix gains are designed against; it
/// equals `A` whenever `A` is constant.
#[derive(Debug, Clone, PartialEq)]
pub struct Plant {
    pub matrix: PlantMatrix,
    pub n_list: Vec<DVector<f64>>,
    pub frozen_a: DMatrix<f64>,
}

impl Plant {
    /// Constant-matrix plant; the frozen design matrix is `A` itself.
    pub fn constant(a: DMatrix<f64>, n_list: Vec<DVector<f64>>) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "A must be square, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        let plant = Plant {
            frozen_a: a.clone(),
            matrix: PlantMatrix::Constant(a),
            n_list,
        };
        plant.check_n_list()?;
        Ok(plant)
    }

    /// Time-varying plant with an explicit frozen design matrix.
    pub fn time_varying(
        entries: Vec<Vec<TimeExpr>>,
        frozen_a: DMatrix<f64>,
        n_list: Vec<DVector<f64>>,
    ) -> Result<Self> {
        let n = entries.len();
        if n == 0 || entries.iter().any(|row| row.len() != n) {
            return Err(Error::DimensionMismatch(
                "A_expr must be a nonempty square grid of expressions".to_string(),
            ));
        }
        if frozen_a.nrows() != n || frozen_a.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "frozen_A is {}x{}, expected {}x{}",
                frozen_a.nrows(),
                frozen_a.ncols(),
                n,
                n
            )));
        }
        let plant = Plant {
            matrix: PlantMatrix::Varying(entries),
            n_list,
            frozen_a,
        };
        plant.check_n_list()?;
        Ok(plant)
    }

    fn check_n_list(&self) -> Result<()> {
        let n = self.n();
        if self.n_list.is_empty() {
            return Err(Error::DimensionMismatch(
                "plant needs at least one input vector N_k".to_string(),
            ));
        }
        for (k, nk) in self.n_list.iter().enumerate() {
            if nk.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "N_{} has length {}, expected {}",
                    k + 1,
                    nk.len(),
                    n
                )));
            }
        }
        Ok(())
    }

    /// State dimension n.
    pub fn n(&self) -> usize {
        match &self.matrix {
            PlantMatrix::Constant(a) => a.nrows(),
            PlantMatrix::Varying(rows) => rows.len(),
        }
    }

    /// Number of forcing channels l.
    pub fn l(&self) -> usize {
        self.n_list.len()
    }

    pub fn is_time_varying(&self) -> bool {
        matches!(&self.matrix, PlantMatrix::Varying(_))
    }

    /// Write A(t) into `out` (n×n) without allocating.
    pub fn a_into(&self, t: f64, out: &mut DMatrix<f64>) {
        match &self.matrix {
            PlantMatrix::Constant(a) => out.copy_from(a),
            PlantMatrix::Varying(rows) => {
                for (i, row) in rows.iter().enumerate() {
                    for (j, expr) in row.iter().enumerate() {
                        out[(i, j)] = expr.eval(t);
                    }
                }
            }
        }
    }

    /// A(t) as a fresh matrix.
    pub fn a_at(&self, t: f64) -> DMatrix<f64> {
        let n = self.n();
        let mut out = DMatrix::zeros(n, n);
        self.a_into(t, &mut out);
        out
    }
}

// ---------------------------------------------------------------------------
// GainSet
// ---------------------------------------------------------------------------

/// Generator gains, partitioned by the augmented block layout:
/// `L11 ∈ R^m`, `L12 ∈ R^n` (columns feeding the matching error into the
/// internal model and plant copies) and `L21 ∈ R^{1×m}`, `L22 ∈ R^{1×n}`,
/// `L3 ∈ R` (the error row). `l21`/`l22` are stored as vectors holding the
/// row entries.
#[derive(Debug, Clone, PartialEq)]
pub struct GainSet {
    pub l11: DVector<f64>,
    pub l12: DVector<f64>,
    pub l21: DVector<f64>,
    pub l22: DVector<f64>,
    pub l3: f64,
}

impl GainSet {
    /// Stacked column gain `L1 = [L11; L12] ∈ R^{m+n}`.
    pub fn l1(&self) -> DVector<f64> {
        let mut v = DVector::zeros(self.l11.len() + self.l12.len());
        v.rows_mut(0, self.l11.len()).copy_from(&self.l11);
        v.rows_mut(self.l11.len(), self.l12.len())
            .copy_from(&self.l12);
        v
    }

    /// Stacked feedback gain `L23 = [L21, L22, L3]ᵀ ∈ R^{m+n+1}`.
    pub fn l23(&self) -> DVector<f64> {
        let (m, n) = (self.l21.len(), self.l22.len());
        let mut v = DVector::zeros(m + n + 1);
        v.rows_mut(0, m).copy_from(&self.l21);
        v.rows_mut(m, n).copy_from(&self.l22);
        v[m + n] = self.l3;
        v
    }

    /// Rebuild a gain set from the stacked views.
    pub fn from_stacked(m: usize, n: usize, l1: &DVector<f64>, l23: &DVector<f64>) -> Result<Self> {
        if l1.len() != m + n || l23.len() != m + n + 1 {
            return Err(Error::DimensionMismatch(format!(
                "stacked gains need lengths {} and {}, got {} and {}",
                m + n,
                m + n + 1,
                l1.len(),
                l23.len()
            )));
        }
        Ok(GainSet {
            l11: l1.rows(0, m).into_owned(),
            l12: l1.rows(m, n).into_owned(),
            l21: l23.rows(0, m).into_owned(),
            l22: l23.rows(m, n).into_owned(),
            l3: l23[m + n],
        })
    }

    /// Dimension mismatches against a scenario's (m, n); empty when clean.
    pub fn dim_errors(&self, m: usize, n: usize) -> Vec<String> {
        let mut errs = Vec::new();
        for (name, got, want) in [
            ("L11", self.l11.len(), m),
            ("L12", self.l12.len(), n),
            ("L21", self.l21.len(), m),
            ("L22", self.l22.len(), n),
        ] {
            if got != want {
                errs.push(format!("{name} has length {got}, expected {want}"));
            }
        }
        errs
    }
}

// ---------------------------------------------------------------------------
// LmiRegion
// ---------------------------------------------------------------------------

/// Shape of a pole-placement region in the open left half plane.
#[derive(Debug, Clone, PartialEq)]
pub enum RegionKind {
    /// Vertical strip `hmin ≤ Re z ≤ hmax` with `hmin < hmax < 0`.
    Strip { hmin: f64, hmax: f64 },
    /// Cone around the negative real axis with the given total opening
    /// angle at the origin: `|Im z| ≤ tan(inner_angle/2)·|Re z|`, `Re z < 0`.
    ConicSector { inner_angle: f64 },
    /// Half plane `Re z ≤ bound`.
    HalfPlane { bound: f64 },
    /// Intersection of member regions.
    Intersection(Vec<LmiRegion>),
}

/// A pole region `D`, carried both geometrically (`kind`) and as the matrix
/// pair `(Q, M)` characterizing `D = {z : Q + zM + z̄Mᵀ ≺ 0}`.
///
/// Membership decisions use the geometric forms — exact and cheap for these
/// primitives. The `(Q, M)` pair is kept because it is the standard algebraic
/// description (and future generic regions would need it); the two views are
/// cross-checked by a sampling property test.
#[derive(Debug, Clone, PartialEq)]
pub struct LmiRegion {
    kind: RegionKind,
    q: DMatrix<f64>,
    m: DMatrix<f64>,
}

impl LmiRegion {
    /// Vertical strip `hmin ≤ Re z ≤ hmax`; requires `hmin < hmax < 0`.
    pub fn strip(hmin: f64, hmax: f64) -> Result<Self> {
        if !(hmin < hmax && hmax < 0.0) {
            return Err(Error::Config(format!(
                "strip requires hmin < hmax < 0, got [{hmin}, {hmax}]"
            )));
        }
        // Q + zM + z̄Mᵀ = diag(2 Re z − 2 hmax, −2 Re z + 2 hmin) ≺ 0.
        let q = DMatrix::from_diagonal(&DVector::from_vec(vec![-2.0 * hmax, 2.0 * hmin]));
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -1.0]));
        Ok(LmiRegion {
            kind: RegionKind::Strip { hmin, hmax },
            q,
            m,
        })
    }

    /// Conic sector centered on the negative real axis, total opening
    /// `inner_angle ∈ (0, π)` at the origin.
    pub fn conic_sector(inner_angle: f64) -> Result<Self> {
        if !(inner_angle > 0.0 && inner_angle < std::f64::consts::PI) {
            return Err(Error::Config(format!(
                "conic sector inner angle must lie in (0, pi), got {inner_angle}"
            )));
        }
        let phi = inner_angle / 2.0;
        let (s, c) = (phi.sin(), phi.cos());
        // Q = 0; eigenvalues of zM + z̄Mᵀ are 2(Re z · sinφ ± Im z · cosφ).
        let q = DMatrix::zeros(2, 2);
        let m = DMatrix::from_row_slice(2, 2, &[s, c, -c, s]);
        Ok(LmiRegion {
            kind: RegionKind::ConicSector { inner_angle },
            q,
            m,
        })
    }

    /// Half plane `Re z ≤ bound`.
    pub fn half_plane(bound: f64) -> Result<Self> {
        let q = DMatrix::from_element(1, 1, -2.0 * bound);
        let m = DMatrix::from_element(1, 1, 1.0);
        Ok(LmiRegion {
            kind: RegionKind::HalfPlane { bound },
            q,
            m,
        })
    }

    /// Intersection of member regions; `(Q, M)` is the block-diagonal stack.
    pub fn intersection(members: Vec<LmiRegion>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::Config("intersection of zero regions".to_string()));
        }
        if members.len() == 1 {
            return Ok(members.into_iter().next().unwrap());
        }
        let size: usize = members.iter().map(|r| r.q.nrows()).sum();
        let mut q = DMatrix::zeros(size, size);
        let mut m = DMatrix::zeros(size, size);
        let mut at = 0usize;
        for member in &members {
            let k = member.q.nrows();
            q.view_mut((at, at), (k, k)).copy_from(&member.q);
            m.view_mut((at, at), (k, k)).copy_from(&member.m);
            at += k;
        }
        Ok(LmiRegion {
            kind: RegionKind::Intersection(members),
            q,
            m,
        })
    }

    pub fn kind(&self) -> &RegionKind {
        &self.kind
    }

    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn m(&self) -> &DMatrix<f64> {
        &self.m
    }

    /// Signed constraint value: ≤ 0 inside the region, > 0 outside. For the
    /// sector this is the Euclidean distance to the boundary ray; for
    /// strip/half-plane it is the distance to the violated bound.
    pub fn violation(&self, z: Complex<f64>) -> f64 {
        match &self.kind {
            RegionKind::HalfPlane { bound } => z.re - bound,
            RegionKind::Strip { hmin, hmax } => (z.re - hmax).max(hmin - z.re),
            RegionKind::ConicSector { inner_angle } => {
                let phi = inner_angle / 2.0;
                z.re * phi.sin() + z.im.abs() * phi.cos()
            }
            RegionKind::Intersection(members) => members
                .iter()
                .map(|r| r.violation(z))
                .fold(f64::NEG_INFINITY, f64::max),
        }
    }

    /// Geometric membership with a margin: `margin > 0` shrinks the region
    /// (used by synthesis to keep poles off the boundary), `margin < 0`
    /// expands it (used to count near-boundary eigenvalues as inside).
    pub fn contains_with_margin(&self, z: Complex<f64>, margin: f64) -> bool {
        self.violation(z) <= -margin
    }

    /// Strict geometric membership.
    pub fn contains(&self, z: Complex<f64>) -> bool {
        self.contains_with_margin(z, 0.0)
    }

    /// Membership through the matrix characterization: true iff
    /// `Q + zM + z̄Mᵀ` is negative definite. The Hermitian matrix is tested
    /// through its real symmetric embedding.
    pub fn matrix_contains(&self, z: Complex<f64>) -> bool {
        let h_re = &self.q + (&self.m + self.m.transpose()) * z.re;
        let h_im = (&self.m - self.m.transpose()) * z.im;
        let embed = linalg::complex_embedding(&h_re, &h_im);
        let sym = (&embed + embed.transpose()) * 0.5;
        let eigs = sym.symmetric_eigen().eigenvalues;
        eigs.iter().all(|&lambda| lambda < 0.0)
    }

    /// The portion of the real axis inside the region, as an interval
    /// (possibly unbounded). Used to seed pole-placement candidates.
    pub fn real_interval(&self) -> (f64, f64) {
        match &self.kind {
            RegionKind::HalfPlane { bound } => (f64::NEG_INFINITY, *bound),
            RegionKind::Strip { hmin, hmax } => (*hmin, *hmax),
            RegionKind::ConicSector { .. } => (f64::NEG_INFINITY, 0.0),
            RegionKind::Intersection(members) => members.iter().fold(
                (f64::NEG_INFINITY, f64::INFINITY),
                |(lo, hi), r| {
                    let (rlo, rhi) = r.real_interval();
                    (lo.max(rlo), hi.min(rhi))
                },
            ),
        }
    }
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone)]
pub struct ValidationEntry {
    pub severity: Severity,
    pub path: String,
    pub message: String,
}

/// Outcome of scenario validation: a flat list of findings. Validation
/// reports, it never fails — an empty list means structurally well-formed.
#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub entries: Vec<ValidationEntry>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.entries.is_empty()
    }

    /// True when no Error-severity entries exist (warnings allowed).
    pub fn is_well_formed(&self) -> bool {
        !self
            .entries
            .iter()
            .any(|e| e.severity == Severity::Error)
    }

    fn error(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.entries.push(ValidationEntry {
            severity: Severity::Error,
            path: path.into(),
            message: message.into(),
        });
    }

    fn warning(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.entries.push(ValidationEntry {
            severity: Severity::Warning,
            path: path.into(),
            message: message.into(),
        });
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for e in &self.entries {
            let tag = match e.severity {
                Severity::Warning => "WARNING",
                Severity::Error => "ERROR",
            };
            writeln!(f, "{tag} {}: {}", e.path, e.message)?;
        }
        Ok(())
    }
}

/// Check a scenario's pieces against each other. Dimension mismatches are
/// errors; modeling smells (exosystem eigenvalues off the imaginary axis,
/// channels with differing signal models) are warnings.
pub fn validate_scenario(
    exo_list: &[Exosystem],
    plant: &Plant,
    gains: Option<&GainSet>,
) -> ValidationReport {
    let mut report = ValidationReport::default();

    if exo_list.is_empty() {
        report.error("exosystems", "at least one exosystem is required");
    }
    for (k, exo) in exo_list.iter().enumerate() {
        let path = format!("exosystems[{k}]");
        for msg in exo.dim_errors() {
            report.error(&path, msg);
        }
        // Bounded forcing needs a neutrally stable signal model; drifting
        // eigenvalues are legal (convergence theory only needs bounded ξ on
        // the horizon) but worth flagging.
        if exo.s.nrows() == exo.s.ncols() && exo.s.nrows() > 0 {
            if let Ok(eigs) = crate::ctrb::eigenvalues(&exo.s) {
                for z in &eigs {
                    if z.re.abs() > 1e-9 * (1.0 + z.norm()) {
                        report.warning(
                            &path,
                            format!(
                                "S has an eigenvalue {:.6}{:+.6}i off the imaginary axis; \
                                 the generated forcing is not persistently bounded",
                                z.re, z.im
                            ),
                        );
                        break;
                    }
                }
            } else {
                report.warning(&path, "eigenvalue computation failed for S");
            }
        }
    }
    // The generator embeds a single internal model, taken from channel 0.
    if let Some(first) = exo_list.first() {
        for (k, exo) in exo_list.iter().enumerate().skip(1) {
            if exo.s.shape() != first.s.shape() {
                report.warning(
                    format!("exosystems[{k}]"),
                    "signal-model dimension differs from channel 0; the generator's \
                     internal model replicates only channel 0's dynamics",
                );
            } else if (&exo.s - &first.s).amax() > VALIDATION_ABS_TOL {
                report.warning(
                    format!("exosystems[{k}]"),
                    "S differs from channel 0's S; the generator embeds a single \
                     internal model and cannot match both exactly",
                );
            }
        }
    }

    let n = plant.n();
    if n == 0 {
        report.error("plant", "plant dimension must be >= 1");
    }
    if plant.n_list.is_empty() {
        report.error("plant.N", "at least one input vector N_k is required");
    }
    for (k, nk) in plant.n_list.iter().enumerate() {
        if nk.len() != n {
            report.error(
                format!("plant.N[{k}]"),
                format!("length {} does not match plant dimension {}", nk.len(), n),
            );
        }
    }
    match &plant.matrix {
        PlantMatrix::Constant(a) => {
            if a.nrows() != a.ncols() {
                report.error("plant.A", format!("must be square, got {}x{}", a.nrows(), a.ncols()));
            }
            if a.shape() == plant.frozen_a.shape()
                && (a - &plant.frozen_a).amax() > VALIDATION_ABS_TOL
            {
                report.error(
                    "plant.frozen_A",
                    "must equal A when the plant matrix is constant",
                );
            }
        }
        PlantMatrix::Varying(rows) => {
            if rows.iter().any(|r| r.len() != rows.len()) {
                report.error("plant.A_expr", "expression grid must be square");
            }
        }
    }
    if plant.frozen_a.nrows() != n || plant.frozen_a.ncols() != n {
        report.error(
            "plant.frozen_A",
            format!(
                "is {}x{}, expected {}x{}",
                plant.frozen_a.nrows(),
                plant.frozen_a.ncols(),
                n,
                n
            ),
        );
    }

    if let (Some(g), Some(first)) = (gains, exo_list.first()) {
        for msg in g.dim_errors(first.dim(), n) {
            report.error("gains", msg);
        }
    }

    report
}
