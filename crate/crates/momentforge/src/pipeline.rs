//! End-to-end assembly: from a parsed problem definition to a block SDP.
//!
//! The generators declared in a problem file span the *ambient* group. Under
//! [`SymmetryMode::Full`] the pipeline keeps only the subgroup that fixes the
//! objective (discovered by [`symmetry_subgroup`]) and averages moments over
//! it; [`SymmetryMode::Split`] additionally conjugates the assembled SDP into
//! the eigenspaces of the problem's declared order-two split generator.

use std::sync::OnceLock;

use crate::dsl::ProblemDefinition;
use crate::relaxation::{
    assemble_sdp, build_relaxation, split_order2, BlockSdp, MomentRelaxation, RelaxError,
    RelaxOptions,
};
use crate::symmetry::{symmetry_subgroup, GroupError, PermGroup};

/// How much symmetry to exploit when building the relaxation.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum SymmetryMode {
    /// Trivial group: one variable per adjoint-related moment class.
    None,
    /// Average over the subgroup of the ambient group fixing the objective.
    Full,
    /// Like `Full`, then block-diagonalize under the declared split generator.
    Split,
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("group enumeration failed: {0}")]
    Group(#[from] GroupError),
    #[error(transparent)]
    Relax(#[from] RelaxError),
    #[error("the problem declares no split generator; add a `split <name>` line")]
    NoSplitGenerator,
}

/// A fully assembled relaxation together with the group data used to build it.
pub struct BuiltRelaxation {
    pub ambient_order: usize,
    pub symmetry_order: usize,
    pub relaxation: MomentRelaxation,
    pub sdp: BlockSdp,
    pub split_applied: bool,
}

/// Enumerates the group generated by the problem's declared generators.
pub fn ambient_group(pd: &ProblemDefinition) -> Result<PermGroup, GroupError> {
    if pd.generators.is_empty() {
        return Ok(PermGroup::trivial(pd.alphabet.size()));
    }
    let gens = pd.generators.iter().map(|(_, g)| g.clone()).collect();
    PermGroup::enumerate(gens, pd.options.group_cap)
}

/// The subgroup of `ambient` that fixes the objective under evaluation rules.
pub fn invariant_subgroup(
    pd: &ProblemDefinition,
    ambient: &PermGroup,
) -> Result<PermGroup, GroupError> {
    symmetry_subgroup(ambient, &pd.objective, &pd.evaluation, &pd.rewrite, pd.options.closure_cap)
}

/// Builds the moment relaxation and assembles its SDP at the given level.
pub fn build_problem(
    pd: &ProblemDefinition,
    mode: SymmetryMode,
    level: usize,
) -> Result<BuiltRelaxation, PipelineError> {
    configure_threads();
    let ambient = ambient_group(pd)?;
    let group = match mode {
        SymmetryMode::None => PermGroup::trivial(pd.alphabet.size()),
        SymmetryMode::Full | SymmetryMode::Split => invariant_subgroup(pd, &ambient)?,
    };
    let opts = RelaxOptions { closure_cap: pd.options.closure_cap, basis_cap: pd.options.basis_cap };
    let relaxation = build_relaxation(&pd.rewrite, &group, &pd.evaluation, &pd.objective, level, &opts)?;
    let mut sdp = assemble_sdp(&relaxation);
    let mut split_applied = false;
    if mode == SymmetryMode::Split {
        let name = pd.split.as_ref().ok_or(PipelineError::NoSplitGenerator)?;
        let g = pd
            .generators
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, g)| g)
            .expect("split generator name is validated at parse time");
        let action = relaxation.basis.action_of(g, &pd.rewrite)?;
        sdp = split_order2(&sdp, &action, pd.options.coupling_tol)?;
        split_applied = true;
    }
    Ok(BuiltRelaxation {
        ambient_order: ambient.order(),
        symmetry_order: group.order(),
        relaxation,
        sdp,
        split_applied,
    })
}

/// Applies the `MOMENTFORGE_THREADS` cap to the global worker pool, once.
/// Values that fail to parse leave the default pool in place.
pub fn configure_threads() {
    static APPLIED: OnceLock<()> = OnceLock::new();
    APPLIED.get_or_init(|| {
        if let Ok(raw) = std::env::var("MOMENTFORGE_THREADS") {
            if let Ok(n) = raw.trim().parse::<usize>() {
                if n >= 1 {
                    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
                }
            }
        }
    });
}
