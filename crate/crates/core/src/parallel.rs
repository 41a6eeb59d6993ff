//! Switch between rayon and plain iteration. Without the `parallel` feature
//! every request runs sequentially.

/// Execution mode for data-parallel loops. Results never depend on it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Parallelism {
    Sequential,
    #[default]
    Parallel,
}

/// Maps `f` over `items`, preserving order.
pub(crate) fn map_ordered<T, R, F>(items: &[T], mode: Parallelism, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    match mode {
        #[cfg(feature = "parallel")]
        Parallelism::Parallel => {
            use rayon::prelude::*;
            items.par_iter().map(f).collect()
        }
        _ => items.iter().map(f).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved_in_both_modes() {
        let items: Vec<u32> = (0..1000).collect();
        let seq = map_ordered(&items, Parallelism::Sequential, |x| x * 3);
        let par = map_ordered(&items, Parallelism::Parallel, |x| x * 3);
        assert_eq!(seq, par);
    }
}
