//! Cross-product iteration over per-slot choice lists.

/// Calls `f` once for every way of picking one element from each slot.
/// With zero slots `f` is called once with the empty pick. Stops early when
/// `f` returns an error.
pub(crate) fn for_each_combo<'a, T, E>(
    options: &'a [&'a [T]],
    mut f: impl FnMut(&[&'a T]) -> Result<(), E>,
) -> Result<(), E> {
    if options.iter().any(|o| o.is_empty()) {
        return Ok(());
    }
    let mut picks = alloc::vec![0usize; options.len()];
    loop {
        let current: alloc::vec::Vec<&T> = picks
            .iter()
            .zip(options)
            .map(|(&i, slot)| &slot[i])
            .collect();
        f(&current)?;
        // advance the rightmost position, carrying leftwards
        let mut pos = options.len();
        loop {
            if pos == 0 {
                return Ok(());
            }
            pos -= 1;
            picks[pos] += 1;
            if picks[pos] < options[pos].len() {
                break;
            }
            picks[pos] = 0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;

    #[test]
    fn empty_slot_list_yields_one_empty_combo() {
        let mut n = 0;
        for_each_combo::<u32, ()>(&[], |c| {
            assert!(c.is_empty());
            n += 1;
            Ok(())
        })
        .unwrap();
        assert_eq!(n, 1);
    }

    #[test]
    fn any_empty_slot_yields_nothing() {
        let a = [1, 2];
        let b: [i32; 0] = [];
        let mut n = 0;
        for_each_combo::<i32, ()>(&[&a, &b], |_| {
            n += 1;
            Ok(())
        })
        .unwrap();
        assert_eq!(n, 0);
    }

    #[test]
    fn enumerates_full_product_in_order() {
        let a = [0, 1];
        let b = [0, 1, 2];
        let mut seen = Vec::new();
        for_each_combo::<i32, ()>(&[&a, &b], |c| {
            seen.push((*c[0], *c[1]));
            Ok(())
        })
        .unwrap();
        assert_eq!(seen.len(), 6);
        assert_eq!(seen[0], (0, 0));
        assert_eq!(seen[5], (1, 2));
    }
}
