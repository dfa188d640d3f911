//! Property-check harness.
//!
//! A [`CheckCase`] bundles a function `f`, a kernel `φ`, a grid, a few base
//! points and the constants the identities need. [`run_suite`] runs the
//! selected checks over a corpus and assembles a deterministic
//! [`CheckReport`].

mod checks;
mod corpus;
mod report;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::envelope::ConvCase;
use crate::error::{Error, Result};
use crate::funcspec::FuncSpec;
use crate::grid::Grid;
use crate::vecset::VecSet;

pub use corpus::builtin_corpus;
pub use report::{CheckRecord, CheckReport, Fingerprint, Mode, RecordVerdict, Summary};

/// Identifiers of the individual checks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckId {
    EnvelopeClosedForm,
    TransferInequality,
    EnvelopeLipschitz,
    BoundedLipschitz,
    WellPosedness,
    FixedPointS0,
    DomInS0,
    GaugeCoercivity,
    FrechetFormulaS0,
    FrechetProjectionInclusion,
    SegmentIdentity,
    SegmentSubgradient,
    EkelandTransferPhi,
    EkelandTransferF,
    LimitingFormulaS0,
    LimitingProjectionUnion,
    GradientFormula,
    GradientContinuity,
    DifferentiabilityEquivalence,
    SubdiffContinuity,
}

impl CheckId {
    pub const ALL: [CheckId; 20] = [
        CheckId::EnvelopeClosedForm,
        CheckId::TransferInequality,
        CheckId::EnvelopeLipschitz,
        CheckId::BoundedLipschitz,
        CheckId::WellPosedness,
        CheckId::FixedPointS0,
        CheckId::DomInS0,
        CheckId::GaugeCoercivity,
        CheckId::FrechetFormulaS0,
        CheckId::FrechetProjectionInclusion,
        CheckId::SegmentIdentity,
        CheckId::SegmentSubgradient,
        CheckId::EkelandTransferPhi,
        CheckId::EkelandTransferF,
        CheckId::LimitingFormulaS0,
        CheckId::LimitingProjectionUnion,
        CheckId::GradientFormula,
        CheckId::GradientContinuity,
        CheckId::DifferentiabilityEquivalence,
        CheckId::SubdiffContinuity,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CheckId::EnvelopeClosedForm => "envelope_closed_form",
            CheckId::TransferInequality => "transfer_inequality",
            CheckId::EnvelopeLipschitz => "envelope_lipschitz",
            CheckId::BoundedLipschitz => "bounded_lipschitz",
            CheckId::WellPosedness => "well_posedness",
            CheckId::FixedPointS0 => "fixed_point_s0",
            CheckId::DomInS0 => "dom_in_s0",
            CheckId::GaugeCoercivity => "gauge_coercivity",
            CheckId::FrechetFormulaS0 => "frechet_formula_s0",
            CheckId::FrechetProjectionInclusion => "frechet_projection_inclusion",
            CheckId::SegmentIdentity => "segment_identity",
            CheckId::SegmentSubgradient => "segment_subgradient",
            CheckId::EkelandTransferPhi => "ekeland_transfer_phi",
            CheckId::EkelandTransferF => "ekeland_transfer_f",
            CheckId::LimitingFormulaS0 => "limiting_formula_s0",
            CheckId::LimitingProjectionUnion => "limiting_projection_union",
            CheckId::GradientFormula => "gradient_formula",
            CheckId::GradientContinuity => "gradient_continuity",
            CheckId::DifferentiabilityEquivalence => "differentiability_equivalence",
            CheckId::SubdiffContinuity => "subdiff_continuity",
        }
    }

    /// The identity or property the check exercises.
    pub fn anchor(self) -> &'static str {
        match self {
            CheckId::EnvelopeClosedForm => "grid envelope equals the declared closed form",
            CheckId::TransferInequality => "(f⊕φ)(x) − (f⊕φ)(y) ≤ φ(y−x) for subadditive φ",
            CheckId::EnvelopeLipschitz => "Lip(f⊕φ) ≤ calmness of φ at 0 for subadditive φ",
            CheckId::BoundedLipschitz => "Lip(f⊕φ; K) ≤ Lip(φ; Ω_K − K) on bounded K",
            CheckId::WellPosedness => {
                "x̄ ∈ S₀, m > ℓ: minimizing sequences converge, |w_k − x̄| ≤ gap_k/(m−ℓ)"
            }
            CheckId::FixedPointS0 => "S₀ = { x : x ∈ P(x) }",
            CheckId::DomInS0 => "m > ℓ ⇒ dom f ⊂ S₀",
            CheckId::GaugeCoercivity => "ρ_F(x) ≥ |F|⁻¹·|x|, so ρ_F is coercive with m = |F|⁻¹",
            CheckId::FrechetFormulaS0 => "∂̂(f⊕φ)(x̄) = ∂̂f(x̄) ∩ [−∂̂φ(0)] on S₀",
            CheckId::FrechetProjectionInclusion => "∂̂(f⊕φ)(x̄) ⊂ ⋂_{w∈P(x̄)} ∂̂f(w) ∩ [−∂̂φ(w−x̄)]",
            CheckId::SegmentIdentity => "(f⊕φ)(x_t) = (1−t)(f⊕φ)(x̄) + t·f(w̄) on [x̄, w̄], w̄ ∈ P(x̄)",
            CheckId::SegmentSubgradient => "∂̂(f⊕φ)(x̄) ⊂ ∂̂(f⊕φ)(x_t) ∩ [−∂̂φ(w−x̄)] along [x̄, w]",
            CheckId::EkelandTransferPhi => "x* ∈ ∂̂_ε(f⊕φ)(x̄) ⇒ x* ∈ −∂̂_{ε+η}φ(w̄−x̄), |w̄−w̃| < η",
            CheckId::EkelandTransferF => "x* ∈ ∂̂_ε(f⊕φ)(x̄) ⇒ x* ∈ ∂̂_{ε+η}f(w̄), |w̄−w̃| < η",
            CheckId::LimitingFormulaS0 => "∂(f⊕φ)(x̄) = ∂f(x̄) ∩ [−∂φ(0)] on S₀",
            CheckId::LimitingProjectionUnion => "∂(f⊕φ)(x̄) ⊂ ⋃_{w̄∈P(x̄)} ∂f(w̄) ∩ [−∂φ(w̄−x̄)]",
            CheckId::GradientFormula => {
                "P(x̄) = {w̄} ⇒ ∇(f⊕φ)(x̄) = −∇φ(w̄−x̄), strictly differentiable"
            }
            CheckId::GradientContinuity => {
                "Moreau envelopes are C¹: adjacent gradient changes are O(h)"
            }
            CheckId::DifferentiabilityEquivalence => {
                "convex f: ∂f(x̄) singleton ⇔ f strictly differentiable at x̄"
            }
            CheckId::SubdiffContinuity => {
                "convex f strictly differentiable ⇒ ∂f strongly continuous"
            }
        }
    }
}

impl fmt::Display for CheckId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CheckId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CheckId::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::InvalidValue(format!("unknown check '{s}'")))
    }
}

/// Constants declared for a case: calmness `ℓ` of `f`, coercivity `m` of
/// φ, and optionally the amplification constant `2(|x*|+m)/(m−ℓ)+1`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Constants {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ell: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amp_alpha: Option<f64>,
}

impl Constants {
    /// `(ℓ, m)` when both are declared and `m > ℓ`.
    pub fn gap(&self) -> Option<(f64, f64)> {
        match (self.ell, self.m) {
            (Some(l), Some(m)) if m > l => Some((l, m)),
            _ => None,
        }
    }
}

/// A closed-form set expected as the left side of a set identity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpectedSet {
    pub check: CheckId,
    pub point: Vec<f64>,
    pub set: VecSet,
}

/// Per-check tolerances.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Hausdorff distance for set equalities.
    pub hausdorff: f64,
    /// Set-membership margin.
    pub membership: f64,
    /// Slack in the transfer inequality.
    pub transfer: f64,
    /// Slack in Lipschitz comparisons.
    pub lipschitz: f64,
    /// Base tolerance of the segment identity.
    pub segment: f64,
    /// Grid envelope vs declared closed form.
    pub closed_form: f64,
    /// Absolute floor for gradient vs finite difference.
    pub gradient: f64,
    /// Multiple of `h` allowed for gradient vs finite difference.
    pub gradient_h: f64,
    /// Multiple of `h` allowed for adjacent gradient changes.
    pub continuity: f64,
    /// η used by the subgradient-transfer searches.
    pub transfer_eta: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            hausdorff: 1e-6,
            membership: 1e-8,
            transfer: 1e-9,
            lipschitz: 1e-9,
            segment: 1e-8,
            closed_form: 1e-9,
            gradient: 1e-4,
            gradient_h: 5.0,
            continuity: 20.0,
            transfer_eta: 0.1,
        }
    }
}

impl Tolerances {
    pub const KEYS: [&'static str; 10] = [
        "hausdorff",
        "membership",
        "transfer",
        "lipschitz",
        "segment",
        "closed_form",
        "gradient",
        "gradient_h",
        "continuity",
        "transfer_eta",
    ];

    pub fn set(&mut self, key: &str, value: f64) -> Result<()> {
        if !(value.is_finite() && value > 0.0) {
            return Err(Error::InvalidValue(format!(
                "tolerance {key} must be positive, got {value}"
            )));
        }
        let slot = match key {
            "hausdorff" => &mut self.hausdorff,
            "membership" => &mut self.membership,
            "transfer" => &mut self.transfer,
            "lipschitz" => &mut self.lipschitz,
            "segment" => &mut self.segment,
            "closed_form" => &mut self.closed_form,
            "gradient" => &mut self.gradient,
            "gradient_h" => &mut self.gradient_h,
            "continuity" => &mut self.continuity,
            "transfer_eta" => &mut self.transfer_eta,
            _ => {
                return Err(Error::InvalidValue(format!(
                    "unknown tolerance key '{key}' (known: {})",
                    Tolerances::KEYS.join(", ")
                )))
            }
        };
        *slot = value;
        Ok(())
    }
}

mod grid_string {
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::grid::Grid;

    pub fn serialize<S: Serializer>(g: &Grid, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(g)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Grid, D::Error> {
        let text = String::deserialize(d)?;
        Grid::parse(&text).map_err(serde::de::Error::custom)
    }
}

/// One corpus entry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckCase {
    pub id: String,
    pub f: FuncSpec,
    pub phi: FuncSpec,
    /// Grid in `lo:hi:n[,lo:hi:n]` form.
    #[serde(with = "grid_string")]
    pub grid: Grid,
    #[serde(default)]
    pub points: Vec<Vec<f64>>,
    #[serde(default)]
    pub constants: Constants,
    /// Closed form of `f ⊕ φ`, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub envelope: Option<FuncSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub expected_sets: Vec<ExpectedSet>,
    #[serde(default)]
    pub tolerances: Tolerances,
}

impl CheckCase {
    /// Checks that points lie on the grid and declared constants agree with
    /// what can be computed.
    pub fn validate(&self) -> Result<()> {
        for p in self
            .points
            .iter()
            .chain(self.expected_sets.iter().map(|e| &e.point))
        {
            self.grid.locate(p)?;
        }
        if let (FuncSpec::Gauge { set }, Some(m)) = (&self.phi, self.constants.m) {
            let (_, want) = set.coercivity();
            if (m - want).abs() > 1e-9 * (1.0 + want) {
                return Err(Error::InvalidSpec(format!(
                    "case {}: declared m = {m} but the gauge has coercivity constant {want}",
                    self.id
                )));
            }
        }
        Ok(())
    }

    pub fn build(&self) -> Result<ConvCase> {
        self.validate()?;
        ConvCase::from_spec(self.f.clone(), self.phi.clone(), &self.grid)
    }

    pub fn corpus_from_json(text: &str) -> Result<Vec<CheckCase>> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Which checks to run.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckSelector(Vec<CheckId>);

impl CheckSelector {
    pub fn all() -> Self {
        CheckSelector(CheckId::ALL.to_vec())
    }

    pub fn only(ids: impl IntoIterator<Item = CheckId>) -> Self {
        let mut v: Vec<CheckId> = ids.into_iter().collect();
        v.sort();
        v.dedup();
        CheckSelector(v)
    }

    pub fn contains(&self, id: CheckId) -> bool {
        self.0.contains(&id)
    }

    pub fn ids(&self) -> &[CheckId] {
        &self.0
    }
}

impl FromStr for CheckSelector {
    type Err = Error;

    /// Comma-separated check ids, or `all`.
    fn from_str(s: &str) -> Result<Self> {
        if s == "all" {
            return Ok(CheckSelector::all());
        }
        s.split(',')
            .map(|p| p.trim().parse())
            .collect::<Result<Vec<_>>>()
            .map(CheckSelector::only)
    }
}

/// Runs the selected checks over the corpus. Records are ordered by case,
/// then check, then point, whatever the thread schedule.
pub fn run_suite(corpus: &[CheckCase], selector: &CheckSelector, seed: u64) -> CheckReport {
    let mut records: Vec<CheckRecord> = corpus
        .par_iter()
        .map(|case| checks::run_case(case, selector, seed))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();
    if selector.contains(CheckId::DifferentiabilityEquivalence)
        || selector.contains(CheckId::SubdiffContinuity)
    {
        records.extend(checks::run_appendix(corpus, selector));
    }
    CheckReport::new(Fingerprint::new(corpus, selector, seed), records)
}

/// Applies `KEY=VAL` overrides to every case.
pub fn apply_overrides(corpus: &mut [CheckCase], overrides: &BTreeMap<String, f64>) -> Result<()> {
    for case in corpus {
        for (k, v) in overrides {
            case.tolerances.set(k, *v)?;
        }
    }
    Ok(())
}
