//! Navigation of the component tree: decomposition depth and subsystem lookup.

use crate::error::ModelError;
use crate::model::{ComponentBody, SystemSpec, DEFAULT_MAX_DEPTH};

/// Levels of decomposition below `spec`: 0 when every component is atomic.
pub fn depth(spec: &SystemSpec) -> Result<u32, ModelError> {
    depth_with(spec, DEFAULT_MAX_DEPTH)
}

pub fn depth_with(spec: &SystemSpec, max_depth: u32) -> Result<u32, ModelError> {
    fn walk(spec: &SystemSpec, remaining: u32, max_depth: u32) -> Result<u32, ModelError> {
        let mut deepest = None;
        for c in &spec.components {
            if let ComponentBody::Subsystem(sub) = &c.body {
                if remaining == 0 {
                    return Err(ModelError::DepthExceeded { max_depth });
                }
                let d = walk(sub, remaining - 1, max_depth)?;
                deepest = Some(deepest.map_or(d, |m: u32| m.max(d)));
            }
        }
        Ok(deepest.map_or(0, |d| d + 1))
    }
    walk(spec, max_depth, max_depth)
}

pub(crate) fn raw_depth(spec: &SystemSpec) -> u32 {
    spec.components
        .iter()
        .filter_map(|c| match &c.body {
            ComponentBody::Subsystem(sub) => Some(1 + raw_depth(sub)),
            ComponentBody::Atomic(_) => None,
        })
        .max()
        .unwrap_or(0)
}

/// Follows `path` (component type ids) through subsystem bodies.
pub fn subsystem_at<'a, S: AsRef<str>>(
    spec: &'a SystemSpec,
    path: &[S],
) -> Result<&'a SystemSpec, ModelError> {
    let mut cur = spec;
    for (i, step) in path.iter().enumerate() {
        let walked = || path[..=i].iter().map(|s| s.as_ref().to_string()).collect();
        let comp = cur
            .component(step.as_ref())
            .ok_or_else(|| ModelError::PathNotFound(walked()))?;
        match &comp.body {
            ComponentBody::Subsystem(sub) => cur = sub,
            ComponentBody::Atomic(_) => return Err(ModelError::PathHitsAtomic(walked())),
        }
    }
    Ok(cur)
}
