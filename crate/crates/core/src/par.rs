//! Data-parallel map with a sequential fallback. Results always come back in
//! input order, so reductions over them are independent of scheduling.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

pub(crate) fn map<T, R, F>(items: &[T], parallel: bool, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if parallel {
            let mut out = Vec::with_capacity(items.len());
            items.par_iter().map(f).collect_into_vec(&mut out);
            return out;
        }
    }
    let _ = parallel;
    items.iter().map(f).collect()
}

/// Whether [`map`] can actually fan out.
pub fn parallel_available() -> bool {
    cfg!(feature = "parallel")
}

#[cfg(test)]
mod tests {
    #[test]
    fn order_preserved_either_way() {
        let xs: Vec<u64> = (0..1000).collect();
        let a = super::map(&xs, true, |x| x * x);
        let b = super::map(&xs, false, |x| x * x);
        assert_eq!(a, b);
        assert_eq!(a[999], 999 * 999);
    }
}
