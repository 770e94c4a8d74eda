use crate::error::HpcError;
use crate::policy::SubgoalBundle;

/// How one child's state vector is built from the compound state: a gather
/// over parent indices, then subgoal substitution on selected positions.
#[derive(Debug, Clone)]
pub struct ChildSieve {
    /// One entry per child state dim; `None` only for dims that are
    /// substituted by a subgoal.
    pub sources: Vec<Option<usize>>,
    /// (position in the child state, offset within the child's subgoal slot).
    pub subst: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, Default)]
pub struct SieverMap {
    pub children: Vec<ChildSieve>,
}

/// Distributes the compound state to each child, overwriting substituted
/// features with the meta subgoal.
pub fn sieve(
    map: &SieverMap,
    state: &[f64],
    subgoals: &SubgoalBundle,
) -> Result<Vec<Vec<f64>>, HpcError> {
    let mut out = Vec::with_capacity(map.children.len());
    for (i, child) in map.children.iter().enumerate() {
        let mut s = Vec::with_capacity(child.sources.len());
        for (k, src) in child.sources.iter().enumerate() {
            match src {
                Some(idx) => {
                    let v = state.get(*idx).ok_or_else(|| {
                        HpcError::Schema(format!(
                            "siever source index {idx} out of range for state width {}",
                            state.len()
                        ))
                    })?;
                    s.push(*v);
                }
                None => {
                    // Placeholder, must be overwritten by a substitution.
                    debug_assert!(child.subst.iter().any(|&(pos, _)| pos == k));
                    s.push(0.0);
                }
            }
        }
        if !child.subst.is_empty() {
            let g = subgoals
                .per_primitive
                .get(i)
                .and_then(|g| g.as_ref())
                .ok_or_else(|| {
                    HpcError::Schema(format!("child {i} has substitutions but no subgoal"))
                })?;
            for &(pos, offset) in &child.subst {
                if pos >= s.len() || offset >= g.len() {
                    return Err(HpcError::Schema(format!(
                        "substitution ({pos}, {offset}) out of range for child {i}"
                    )));
                }
                s[pos] = g[offset];
            }
        }
        out.push(s);
    }
    Ok(out)
}
