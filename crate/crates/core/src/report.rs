/// Per-term evaluation of an identity, with a scale-free residual.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    pub identity: String,
    /// Number of time cells on `[0, T]`.
    pub n: usize,
    /// Steklov window `h` or cutoff ramp `delta`, when the identity has one.
    pub param: Option<f64>,
    pub terms: Vec<(String, f64)>,
    /// Signed `LHS - RHS`.
    pub raw: f64,
    /// `|raw| / max(max_i |term_i|, 1e-30)`.
    pub residual: f64,
}

/// Floor for the normalization denominator.
pub const NORMALIZATION_FLOOR: f64 = 1e-30;

impl ResidualReport {
    /// Report for `lhs_terms` summing against `rhs_terms`.
    pub fn from_sides(
        identity: impl Into<String>,
        n: usize,
        param: Option<f64>,
        lhs_terms: Vec<(String, f64)>,
        rhs_terms: Vec<(String, f64)>,
    ) -> Self {
        let lhs: f64 = lhs_terms.iter().map(|t| t.1).sum();
        let rhs: f64 = rhs_terms.iter().map(|t| t.1).sum();
        let mut terms = lhs_terms;
        terms.extend(rhs_terms);
        Self::from_raw(identity, n, param, terms, lhs - rhs)
    }

    /// Report whose raw residual is already known; `terms` set the scale.
    pub fn from_raw(
        identity: impl Into<String>,
        n: usize,
        param: Option<f64>,
        terms: Vec<(String, f64)>,
        raw: f64,
    ) -> Self {
        let scale = terms.iter().fold(0.0_f64, |m, t| m.max(t.1.abs()));
        Self {
            identity: identity.into(),
            n,
            param,
            terms,
            raw,
            residual: raw.abs() / scale.max(NORMALIZATION_FLOOR),
        }
    }

    pub fn term(&self, name: &str) -> Option<f64> {
        self.terms.iter().find(|t| t.0 == name).map(|t| t.1)
    }

    pub fn passes(&self, tolerance: f64) -> bool {
        self.residual.is_finite() && self.residual <= tolerance
    }

    pub const CSV_HEADER: [&'static str; 5] = ["identity", "n", "param", "terms", "normalized_residual"];

    /// CSV fields; numbers carry 17 significant digits and the raw terms are
    /// packed as `name=value` pairs separated by `;`.
    pub fn csv_fields(&self) -> [String; 5] {
        let mut terms: Vec<String> = self.terms.iter().map(|(k, v)| format!("{k}={}", fmt17(*v))).collect();
        terms.push(format!("raw={}", fmt17(self.raw)));
        [
            self.identity.clone(),
            self.n.to_string(),
            self.param.map(fmt17).unwrap_or_default(),
            terms.join(";"),
            fmt17(self.residual),
        ]
    }
}

/// Float with 17 significant digits.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}
