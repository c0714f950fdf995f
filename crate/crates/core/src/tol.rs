use crate::error::ToleranceError;
use crate::scalar::Real;

/// Every numeric threshold used by the decision pipeline.
///
/// Defaults for `f64`: `rank_rtol = 1e-10`, `eig_cluster_atol = 1e-8`,
/// `commute_rtol = 1e-8`, `verify_rtol = 1e-8`, `defect_rtol = 1e-6`.
/// Matrix-dependent scales use `scale(M) = max(1, ‖M‖_F)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToleranceContext<T> {
    /// Singular values `≤ rank_rtol · σ_max · max(rows, cols)` count as zero.
    pub rank_rtol: T,
    /// Eigenvalues within `eig_cluster_atol · scale` are merged.
    pub eig_cluster_atol: T,
    /// Commutators `≤ commute_rtol · ‖A‖_F · ‖B‖_F` count as zero.
    pub commute_rtol: T,
    /// Off-diagonal mass `≤ verify_rtol · scale` counts as diagonal.
    pub verify_rtol: T,
    /// A group of nearby eigenvalues is semisimple only if the union of its
    /// unit eigenvectors has smallest singular value above this threshold.
    pub defect_rtol: T,
}

impl<T: Real> Default for ToleranceContext<T> {
    fn default() -> Self {
        let [rank_rtol, eig_cluster_atol, commute_rtol, verify_rtol, defect_rtol] =
            T::default_thresholds();
        Self {
            rank_rtol,
            eig_cluster_atol,
            commute_rtol,
            verify_rtol,
            defect_rtol,
        }
    }
}

impl<T: Real> ToleranceContext<T> {
    pub fn new(
        rank_rtol: T,
        eig_cluster_atol: T,
        commute_rtol: T,
        verify_rtol: T,
        defect_rtol: T,
    ) -> Result<Self, ToleranceError> {
        let tol = Self {
            rank_rtol,
            eig_cluster_atol,
            commute_rtol,
            verify_rtol,
            defect_rtol,
        };
        tol.validate()?;
        Ok(tol)
    }

    /// Every threshold set to the same value.
    pub fn uniform(value: T) -> Result<Self, ToleranceError> {
        Self::new(value, value, value, value, value)
    }

    pub fn validate(&self) -> Result<(), ToleranceError> {
        for (name, v) in self.fields() {
            if !(v > T::zero() && v < T::one()) {
                return Err(ToleranceError {
                    field: name,
                    value: v.to_f64().unwrap_or(f64::NAN),
                });
            }
        }
        Ok(())
    }

    /// `(name, value)` pairs in a stable order, for reports.
    pub fn fields(&self) -> [(&'static str, T); 5] {
        [
            ("rank_rtol", self.rank_rtol),
            ("eig_cluster_atol", self.eig_cluster_atol),
            ("commute_rtol", self.commute_rtol),
            ("verify_rtol", self.verify_rtol),
            ("defect_rtol", self.defect_rtol),
        ]
    }

    /// Replace one named field.
    pub fn with_field(mut self, name: &str, value: T) -> Result<Self, ToleranceError> {
        match name {
            "rank" | "rank_rtol" => self.rank_rtol = value,
            "eig" | "cluster" | "eig_cluster_atol" => self.eig_cluster_atol = value,
            "commute" | "commute_rtol" => self.commute_rtol = value,
            "verify" | "verify_rtol" => self.verify_rtol = value,
            "defect" | "defect_rtol" => self.defect_rtol = value,
            _ => {
                return Err(ToleranceError {
                    field: "unknown",
                    value: f64::NAN,
                });
            }
        }
        self.validate()?;
        Ok(self)
    }

    /// Raises `rank_rtol`, `eig_cluster_atol` and `commute_rtol` to at least
    /// `floor`, for inputs that carry rounding noise of that relative size.
    pub fn with_noise_floor(mut self, floor: T) -> Self {
        let floor = floor.min(T::lit(0.5));
        self.rank_rtol = self.rank_rtol.max(floor);
        self.eig_cluster_atol = self.eig_cluster_atol.max(floor);
        self.commute_rtol = self.commute_rtol.max(floor);
        self
    }
}

/// `max(1, norm)`.
#[inline]
pub fn scale<T: Real>(norm: T) -> T {
    norm.max(T::one())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_valid() {
        ToleranceContext::<f64>::default().validate().unwrap();
        ToleranceContext::<f32>::default().validate().unwrap();
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(ToleranceContext::<f64>::uniform(0.0).is_err());
        assert!(ToleranceContext::<f64>::uniform(1.0).is_err());
        assert!(ToleranceContext::<f64>::uniform(f64::NAN).is_err());
        let t = ToleranceContext::<f64>::default()
            .with_field("verify", 1e-16)
            .unwrap();
        assert_eq!(t.verify_rtol, 1e-16);
        assert!(t.with_field("bogus", 0.1).is_err());
    }
}
