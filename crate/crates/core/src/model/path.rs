use crate::error::{Error, Result};

/// One realisation of the claim process on `[0, horizon]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePath {
    horizon: f64,
    arrivals: Vec<f64>,
    claims: Vec<f64>,
    aggregate: f64,
}

impl SamplePath {
    pub fn new(horizon: f64, arrivals: Vec<f64>, claims: Vec<f64>) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::invalid("horizon", "must be positive and finite"));
        }
        if arrivals.len() != claims.len() {
            return Err(Error::invalid(
                "claims",
                format!("{} claims for {} arrivals", claims.len(), arrivals.len()),
            ));
        }
        let mut prev = 0.0;
        for &a in &arrivals {
            if !(a > prev && a <= horizon) {
                return Err(Error::invalid(
                    "arrivals",
                    "must be strictly increasing within (0, horizon]",
                ));
            }
            prev = a;
        }
        if claims.iter().any(|&x| !(x >= 0.0 && x.is_finite())) {
            return Err(Error::invalid("claims", "must be finite and nonnegative"));
        }
        let aggregate = claims.iter().sum();
        Ok(Self {
            horizon,
            arrivals,
            claims,
            aggregate,
        })
    }

    pub fn empty(horizon: f64) -> Result<Self> {
        Self::new(horizon, Vec::new(), Vec::new())
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn arrivals(&self) -> &[f64] {
        &self.arrivals
    }

    pub fn claims(&self) -> &[f64] {
        &self.claims
    }

    pub fn len(&self) -> usize {
        self.arrivals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arrivals.is_empty()
    }

    /// `S(t)`, the sum of the claims in arrival order.
    pub fn aggregate(&self) -> f64 {
        self.aggregate
    }

    /// Inter-claim times `V_i = T_i - T_{i-1}` with `T_0 = 0`.
    pub fn inter_claim_times(&self) -> impl Iterator<Item = f64> + '_ {
        let mut prev = 0.0;
        self.arrivals.iter().map(move |&a| {
            let v = a - prev;
            prev = a;
            v
        })
    }
}
