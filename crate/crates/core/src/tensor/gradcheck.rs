use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use super::{Graph, NodeId, ParamStore};
use crate::{Error, Result};

/// Outcome of comparing analytic gradients with central differences.
#[derive(Debug, Clone, PartialEq)]
pub struct GradReport {
    pub max_relative_error: f64,
    pub per_parameter_errors: BTreeMap<String, f64>,
    pub epsilon: f64,
}

/// Compares the reverse-mode gradient of a scalar `forward` with central
/// differences for every entry of every parameter in `store`. The relative
/// error of one entry is `|analytic - numeric| / max(1, |numeric|)`.
///
/// Existing gradients in `store` are cleared.
pub fn grad_check<F>(store: &mut ParamStore, eps: f64, forward: F) -> Result<GradReport>
where
    F: Fn(&mut Graph, &ParamStore) -> Result<NodeId>,
{
    if !(eps > 0.0 && eps <= 1e-3) {
        return Err(Error::Config(alloc::format!("grad_check eps {eps} outside (0, 1e-3]")));
    }
    let eval = |store: &ParamStore| -> Result<f64> {
        let mut g = Graph::new();
        let out = forward(&mut g, store)?;
        let (r, c) = g.dims(out);
        if r * c != 1 {
            return Err(Error::NotScalar(vec![r, c]));
        }
        let v = g.scalar(out);
        if !v.is_finite() {
            return Err(Error::NonFinite("grad_check forward"));
        }
        Ok(v)
    };

    let ids: Vec<_> = store.ids().collect();
    for &id in &ids {
        store.get_mut(id).clear_grad();
    }
    {
        let mut g = Graph::new();
        let out = forward(&mut g, store)?;
        if !g.scalar(out).is_finite() {
            return Err(Error::NonFinite("grad_check forward"));
        }
        g.backward(out, store)?;
    }

    let mut per_parameter_errors = BTreeMap::new();
    let mut max_relative_error: f64 = 0.0;
    for id in ids {
        let analytic = store
            .get(id)
            .grad()
            .map(<[f64]>::to_vec)
            .unwrap_or_else(|| vec![0.0; store.get(id).len()]);
        let mut worst: f64 = 0.0;
        for e in 0..analytic.len() {
            let orig = store.get(id).data()[e];
            store.get_mut(id).data_mut()[e] = orig + eps;
            let plus = eval(store);
            store.get_mut(id).data_mut()[e] = orig - eps;
            let minus = eval(store);
            store.get_mut(id).data_mut()[e] = orig;
            let numeric = (plus? - minus?) / (2.0 * eps);
            let err = libm::fabs(analytic[e] - numeric) / libm::fmax(1.0, libm::fabs(numeric));
            worst = worst.max(err);
        }
        max_relative_error = max_relative_error.max(worst);
        per_parameter_errors.insert(store.name(id).to_string(), worst);
    }
    Ok(GradReport {
        max_relative_error,
        per_parameter_errors,
        epsilon: eps,
    })
}
