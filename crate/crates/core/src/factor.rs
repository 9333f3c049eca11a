//! Dense factor tables and the three primitive operations the inference
//! engine is built from: multiplication, summation and substitution.
//!
//! Tables are laid out row-major over the scope with the **last** scope
//! variable varying fastest. A factor over `[B, E]` with both binary stores
//! `[(b0,e0), (b0,e1), (b1,e0), (b1,e1)]`. The empty scope holds exactly one
//! value.
//!
//! Factors are values: every operation returns a new factor and never
//! mutates its inputs.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::variable::{Assignment, Variable};

pub type VarRef = Arc<Variable>;

#[derive(Debug, Clone, PartialEq)]
pub struct Factor<T> {
    scope: Vec<VarRef>,
    values: Vec<T>,
}

fn strides(cards: &[usize]) -> Vec<usize> {
    let mut out = vec![1; cards.len()];
    for d in (0..cards.len().saturating_sub(1)).rev() {
        out[d] = out[d + 1] * cards[d + 1];
    }
    out
}

/// Visits every cell of a table with cardinalities `cards` in row-major
/// order, passing the matching offset into an operand whose per-dimension
/// strides are `operand_strides` (0 for dimensions the operand lacks).
fn walk(cards: &[usize], operand_strides: &[usize], base: usize, mut visit: impl FnMut(usize)) {
    let total: usize = cards.iter().product();
    if total == 0 {
        return;
    }
    let n = cards.len();
    let mut idx = vec![0usize; n];
    let mut off = base;
    for _ in 0..total {
        visit(off);
        let mut d = n;
        while d > 0 {
            d -= 1;
            idx[d] += 1;
            off += operand_strides[d];
            if idx[d] < cards[d] {
                break;
            }
            off -= operand_strides[d] * cards[d];
            idx[d] = 0;
        }
    }
}

impl<T: Scalar> Factor<T> {
    pub fn new(scope: Vec<VarRef>, values: Vec<T>) -> Result<Self> {
        for (i, v) in scope.iter().enumerate() {
            if scope[..i].iter().any(|u| u.name() == v.name()) {
                return Err(Error::InvalidFactor(format!(
                    "variable `{}` appears twice in the scope",
                    v.name()
                )));
            }
        }
        let expected: usize = scope.iter().map(|v| v.cardinality()).product();
        if values.len() != expected {
            return Err(Error::InvalidFactor(format!(
                "expected {expected} values, got {}",
                values.len()
            )));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_valid_entry()) {
            return Err(Error::InvalidFactor(format!(
                "entries must be finite and nonnegative, found {bad}"
            )));
        }
        Ok(Factor { scope, values })
    }

    /// The empty-scope factor holding `value`.
    pub fn scalar(value: T) -> Self {
        Factor {
            scope: Vec::new(),
            values: vec![value],
        }
    }

    pub fn ones(scope: Vec<VarRef>) -> Result<Self> {
        let n: usize = scope.iter().map(|v| v.cardinality()).product();
        Factor::new(scope, vec![T::one(); n])
    }

    /// Builds a table by evaluating `f` at every state tuple of `scope`.
    pub fn from_fn(scope: Vec<VarRef>, mut f: impl FnMut(&[usize]) -> T) -> Result<Self> {
        let cards: Vec<usize> = scope.iter().map(|v| v.cardinality()).collect();
        let n: usize = cards.iter().product();
        let mut values = Vec::with_capacity(n);
        let mut idx = vec![0usize; cards.len()];
        for _ in 0..n {
            values.push(f(&idx));
            for d in (0..cards.len()).rev() {
                idx[d] += 1;
                if idx[d] < cards[d] {
                    break;
                }
                idx[d] = 0;
            }
        }
        Factor::new(scope, values)
    }

    pub fn scope(&self) -> &[VarRef] {
        &self.scope
    }

    pub fn names(&self) -> impl Iterator<Item = &str> + '_ {
        self.scope.iter().map(|v| v.name())
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_scalar(&self) -> bool {
        self.scope.is_empty()
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.scope.iter().position(|v| v.name() == name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.position(name).is_some()
    }

    fn cards(&self) -> Vec<usize> {
        self.scope.iter().map(|v| v.cardinality()).collect()
    }

    /// Value at a state tuple given in scope order.
    pub fn get(&self, states: &[usize]) -> Option<&T> {
        if states.len() != self.scope.len() {
            return None;
        }
        let st = strides(&self.cards());
        let mut off = 0;
        for ((s, v), stride) in states.iter().zip(&self.scope).zip(st) {
            if *s >= v.cardinality() {
                return None;
            }
            off += s * stride;
        }
        self.values.get(off)
    }

    /// Value at an assignment binding (at least) every scope variable.
    pub fn value(&self, assignment: &Assignment) -> Option<&T> {
        let states: Option<Vec<usize>> = self
            .scope
            .iter()
            .map(|v| assignment.get(v.name()))
            .collect();
        self.get(&states?)
    }

    pub fn total(&self) -> T {
        self.values
            .iter()
            .fold(T::zero(), |acc, v| acc + v.clone())
    }

    /// Strides of `self` expressed along the dimensions of `target`; 0 where
    /// `target` has a variable `self` lacks.
    fn strides_along(&self, target: &[VarRef]) -> Vec<usize> {
        let own = strides(&self.cards());
        target
            .iter()
            .map(|v| self.position(v.name()).map_or(0, |p| own[p]))
            .collect()
    }

    /// Product of two factors. The result's scope is `self`'s scope followed by
    /// the variables of `other` that `self` lacks.
    pub fn multiply(&self, other: &Factor<T>) -> Result<Factor<T>> {
        let mut scope = self.scope.clone();
        for v in &other.scope {
            match self.position(v.name()) {
                Some(p) => {
                    let mine = &self.scope[p];
                    if mine.cardinality() != v.cardinality() {
                        return Err(Error::IncompatibleVariable {
                            name: v.name().to_string(),
                            left: mine.cardinality(),
                            right: v.cardinality(),
                        });
                    }
                }
                None => scope.push(v.clone()),
            }
        }
        let cards: Vec<usize> = scope.iter().map(|v| v.cardinality()).collect();
        // self occupies the leading dimensions in its own order, so its offset
        // is the result offset divided by the size of the appended block.
        let block: usize = cards[self.scope.len()..].iter().product();
        let other_strides = other.strides_along(&scope);
        let mut values = Vec::with_capacity(cards.iter().product());
        let mut r = 0usize;
        walk(&cards, &other_strides, 0, |o| {
            values.push(self.values[r / block].clone() * other.values[o].clone());
            r += 1;
        });
        Ok(Factor { scope, values })
    }

    /// Sums the factor over every state of `vars`.
    pub fn sum_out<S: AsRef<str>>(&self, vars: &[S]) -> Result<Factor<T>> {
        for v in vars {
            if !self.contains(v.as_ref()) {
                return Err(Error::MissingVariable(v.as_ref().to_string()));
            }
        }
        if vars.is_empty() {
            return Ok(self.clone());
        }
        let scope: Vec<VarRef> = self
            .scope
            .iter()
            .filter(|v| !vars.iter().any(|s| s.as_ref() == v.name()))
            .cloned()
            .collect();
        let out_cards: Vec<usize> = scope.iter().map(|v| v.cardinality()).collect();
        let out_strides = strides(&out_cards);
        let along: Vec<usize> = self
            .scope
            .iter()
            .map(|v| {
                scope
                    .iter()
                    .position(|u| u.name() == v.name())
                    .map_or(0, |p| out_strides[p])
            })
            .collect();
        let mut values = vec![T::zero(); out_cards.iter().product()];
        let mut r = 0usize;
        walk(&self.cards(), &along, 0, |o| {
            let acc = std::mem::replace(&mut values[o], T::zero());
            values[o] = acc + self.values[r].clone();
            r += 1;
        });
        Ok(Factor { scope, values })
    }

    /// Sums out every variable not named in `keep`. Names in `keep` that are
    /// outside the scope are ignored.
    pub fn marginal<S: AsRef<str>>(&self, keep: &[S]) -> Result<Factor<T>> {
        let drop: Vec<&str> = self
            .names()
            .filter(|n| !keep.iter().any(|k| k.as_ref() == *n))
            .collect();
        self.sum_out(&drop)
    }

    /// Slices the table at `var = state`, removing that dimension.
    pub fn substitute(&self, var: &str, state: usize) -> Result<Factor<T>> {
        let p = self
            .position(var)
            .ok_or_else(|| Error::MissingVariable(var.to_string()))?;
        let card = self.scope[p].cardinality();
        if state >= card {
            return Err(Error::BadState {
                name: var.to_string(),
                state,
                cardinality: card,
            });
        }
        let own = strides(&self.cards());
        let mut scope = self.scope.clone();
        scope.remove(p);
        let mut along = own.clone();
        along.remove(p);
        let cards: Vec<usize> = scope.iter().map(|v| v.cardinality()).collect();
        let mut values = Vec::with_capacity(cards.iter().product());
        walk(&cards, &along, state * own[p], |o| values.push(self.values[o].clone()));
        Ok(Factor { scope, values })
    }

    /// Turns a joint over `targets ∪ rest` into `P(targets | rest)` by
    /// normalising each `rest` context. All-zero contexts stay all-zero.
    pub fn normalize_conditional<S: AsRef<str>>(&self, targets: &[S]) -> Result<Factor<T>> {
        let sums = self.sum_out(targets)?;
        self.divide(&sums)
    }

    /// Cell-wise quotient by a factor whose scope is a subset of `self`'s,
    /// with `0/0 := 0`.
    pub fn divide(&self, denom: &Factor<T>) -> Result<Factor<T>> {
        for v in &denom.scope {
            let p = self
                .position(v.name())
                .ok_or_else(|| Error::MissingVariable(v.name().to_string()))?;
            if self.scope[p].cardinality() != v.cardinality() {
                return Err(Error::IncompatibleVariable {
                    name: v.name().to_string(),
                    left: self.scope[p].cardinality(),
                    right: v.cardinality(),
                });
            }
        }
        let along = denom.strides_along(&self.scope);
        let mut values = Vec::with_capacity(self.values.len());
        let mut r = 0usize;
        walk(&self.cards(), &along, 0, |o| {
            values.push(T::div_or_zero(&self.values[r], &denom.values[o]));
            r += 1;
        });
        Ok(Factor {
            scope: self.scope.clone(),
            values,
        })
    }

    /// The same table with its scope reordered to `order`, which must name
    /// every scope variable exactly once.
    pub fn permuted<S: AsRef<str>>(&self, order: &[S]) -> Result<Factor<T>> {
        if order.len() != self.scope.len() {
            return Err(Error::InvalidFactor(format!(
                "permutation names {} variables, scope has {}",
                order.len(),
                self.scope.len()
            )));
        }
        let mut scope = Vec::with_capacity(order.len());
        for name in order {
            let p = self
                .position(name.as_ref())
                .ok_or_else(|| Error::MissingVariable(name.as_ref().to_string()))?;
            if scope.iter().any(|v: &VarRef| v.name() == name.as_ref()) {
                return Err(Error::InvalidFactor(format!(
                    "`{}` repeated in permutation",
                    name.as_ref()
                )));
            }
            scope.push(self.scope[p].clone());
        }
        let along = self.strides_along(&scope);
        let cards: Vec<usize> = scope.iter().map(|v| v.cardinality()).collect();
        let mut values = Vec::with_capacity(self.values.len());
        walk(&cards, &along, 0, |o| values.push(self.values[o].clone()));
        Ok(Factor { scope, values })
    }

    /// Largest absolute cell difference after aligning `other` to this
    /// factor's scope order. Fails when the scopes name different variables.
    pub fn max_abs_diff(&self, other: &Factor<T>) -> Result<f64> {
        let names: Vec<&str> = self.names().collect();
        if other.scope.len() != names.len() {
            return Err(Error::InvalidFactor(format!(
                "scopes differ: {:?} vs {:?}",
                names,
                other.names().collect::<Vec<_>>()
            )));
        }
        let aligned = other.permuted(&names)?;
        Ok(self
            .values
            .iter()
            .zip(&aligned.values)
            .map(|(a, b)| (a.as_f64() - b.as_f64()).abs())
            .fold(0.0, f64::max))
    }

    /// Exact cell equality after aligning scopes.
    pub fn same_cells(&self, other: &Factor<T>) -> bool {
        let names: Vec<&str> = self.names().collect();
        other.scope.len() == names.len()
            && other
                .permuted(&names)
                .map(|a| a.values == self.values)
                .unwrap_or(false)
    }

    /// Converts every entry into another scalar type.
    pub fn map<U: Scalar>(&self, mut f: impl FnMut(&T) -> U) -> Result<Factor<U>> {
        Factor::new(self.scope.clone(), self.values.iter().map(&mut f).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn var(name: &str, card: usize) -> VarRef {
        Arc::new(Variable::with_cardinality(name, card).unwrap())
    }

    fn f(scope: Vec<VarRef>, values: Vec<f64>) -> Factor<f64> {
        Factor::new(scope, values).unwrap()
    }

    #[test]
    fn rejects_bad_tables() {
        let b = var("B", 2);
        assert!(Factor::<f64>::new(vec![b.clone()], vec![0.5]).is_err());
        assert!(Factor::<f64>::new(vec![b.clone()], vec![0.5, -0.1]).is_err());
        assert!(Factor::<f64>::new(vec![b.clone()], vec![0.5, f64::NAN]).is_err());
        assert!(Factor::<f64>::new(vec![b.clone(), b], vec![0.0; 4]).is_err());
        assert_eq!(Factor::<f64>::new(vec![], vec![2.0]).unwrap().len(), 1);
    }

    #[test]
    fn multiply_by_unit_scalar_is_identity() {
        let b = var("B", 2);
        let fb = f(vec![b], vec![0.3, 0.7]);
        let out = fb.multiply(&Factor::scalar(1.0)).unwrap();
        assert_eq!(out, fb);
        let out = Factor::scalar(1.0).multiply(&fb).unwrap();
        assert_eq!(out, fb);
    }

    #[test]
    fn multiply_by_zeros_annihilates() {
        let b = var("B", 2);
        let out = f(vec![b.clone()], vec![0.3, 0.7])
            .multiply(&f(vec![b], vec![0.0, 0.0]))
            .unwrap();
        assert_eq!(out.values(), &[0.0, 0.0]);
    }

    #[test]
    fn multiply_matches_hand_enumeration() {
        let b = var("B", 2);
        let e = var("E", 2);
        let fb = f(vec![b.clone()], vec![0.3, 0.7]);
        let g = f(vec![b.clone(), e.clone()], vec![0.1, 0.9, 0.6, 0.4]);
        let out = fb.multiply(&g).unwrap();
        assert_eq!(out.names().collect::<Vec<_>>(), ["B", "E"]);
        // (b,e) -> f(b) * g(b,e), enumerated by hand
        let expected = [0.3 * 0.1, 0.3 * 0.9, 0.7 * 0.6, 0.7 * 0.4];
        assert_eq!(out.values(), &expected);
        for bi in 0..2 {
            for ei in 0..2 {
                let a = Assignment::new().with(&b, bi).unwrap().with(&e, ei).unwrap();
                assert_eq!(
                    *out.value(&a).unwrap(),
                    fb.value(&a).unwrap() * g.value(&a).unwrap()
                );
            }
        }
    }

    #[test]
    fn multiply_rejects_conflicting_cardinality() {
        let out = f(vec![var("B", 2)], vec![0.5, 0.5]).multiply(&f(vec![var("B", 3)], vec![1.0; 3]));
        assert!(matches!(out, Err(Error::IncompatibleVariable { .. })));
    }

    #[test]
    fn sum_out_cases() {
        let b = var("B", 2);
        let e = var("E", 2);
        let g = f(vec![b, e], vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(g.sum_out::<&str>(&[]).unwrap(), g);
        let s = g.sum_out(&["E"]).unwrap();
        assert_eq!(s.values(), &[3.0, 7.0]);
        assert_eq!(s.names().collect::<Vec<_>>(), ["B"]);
        let all = g.sum_out(&["B", "E"]).unwrap();
        assert!(all.is_scalar());
        assert_eq!(all.values(), &[10.0]);
        assert!(matches!(g.sum_out(&["X"]), Err(Error::MissingVariable(_))));
    }

    #[test]
    fn sum_out_child_of_cpt_gives_ones() {
        let b = var("B", 2);
        let e = var("E", 2);
        let d = var("D", 2);
        let cpt = f(
            vec![b, e, d],
            vec![0.1, 0.9, 0.2, 0.8, 0.7, 0.3, 0.05, 0.95],
        );
        let s = cpt.sum_out(&["D"]).unwrap();
        for v in s.values() {
            assert!((v - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn substitute_cases() {
        let e = var("E", 2);
        let fe = f(vec![e.clone()], vec![0.2, 0.8]);
        let s = fe.substitute("E", 1).unwrap();
        assert!(s.is_scalar());
        assert_eq!(s.values(), &[0.8]);

        let b = var("B", 2);
        let g = f(vec![b, e], vec![1.0, 2.0, 3.0, 4.0]);
        let s = g.substitute("E", 0).unwrap();
        assert_eq!(s.values(), &[1.0, 3.0]);
        assert_eq!(s.names().collect::<Vec<_>>(), ["B"]);

        assert!(matches!(g.substitute("Q", 0), Err(Error::MissingVariable(_))));
        assert!(matches!(g.substitute("E", 2), Err(Error::BadState { .. })));
    }

    #[test]
    fn substitute_and_sum_commute_on_three_variables() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let scope = vec![var("A", 2), var("B", 3), var("C", 2)];
        let g = Factor::from_fn(scope.clone(), |_| rng.gen_range(0.0..1.0)).unwrap();
        for state in 0..3 {
            // substitute B, then sum out the rest
            let left = g.substitute("B", state).unwrap().sum_out(&["A", "C"]).unwrap();
            // sum out everything but B, then substitute
            let right = g.sum_out(&["A", "C"]).unwrap().substitute("B", state).unwrap();
            // enumeration oracle
            let mut oracle = 0.0f64;
            for a in 0..2 {
                for c in 0..2 {
                    oracle += g.get(&[a, state, c]).unwrap();
                }
            }
            assert!((left.values()[0] - oracle).abs() < 1e-12);
            assert!((right.values()[0] - oracle).abs() < 1e-12);
        }
    }

    #[test]
    fn normalize_conditional_cases() {
        let x = var("X", 2);
        let n = f(vec![x.clone()], vec![0.25, 0.25]).normalize_conditional(&["X"]).unwrap();
        assert_eq!(n.values(), &[0.5, 0.5]);
        let z = f(vec![x.clone()], vec![0.0, 0.0]).normalize_conditional(&["X"]).unwrap();
        assert_eq!(z.values(), &[0.0, 0.0]);

        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let y = var("Y", 3);
        let mut g = Factor::from_fn(vec![x, y], |_| rng.gen_range(0.0..1.0)).unwrap();
        // make one Y column impossible
        g = g
            .multiply(&f(vec![var("Y", 3)], vec![1.0, 0.0, 1.0]))
            .unwrap();
        let n = g.normalize_conditional(&["X"]).unwrap();
        for yi in 0..3 {
            let col: f64 = (0..2).map(|xi| n.get(&[xi, yi]).unwrap()).sum();
            let want = if yi == 1 { 0.0 } else { 1.0 };
            assert!((col - want).abs() < 1e-12, "column {yi} sums to {col}");
        }
    }

    #[test]
    fn permuted_reorders_cells() {
        let a = var("A", 2);
        let b = var("B", 3);
        let g = f(vec![a, b], vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0]);
        let p = g.permuted(&["B", "A"]).unwrap();
        assert_eq!(p.values(), &[0.0, 3.0, 1.0, 4.0, 2.0, 5.0]);
        assert!(p.same_cells(&g));
        assert_eq!(g.max_abs_diff(&p).unwrap(), 0.0);
    }

    #[test]
    fn divide_uses_zero_over_zero() {
        let a = var("A", 2);
        let b = var("B", 2);
        let g = f(vec![a.clone(), b], vec![0.0, 0.0, 1.0, 3.0]);
        let s = g.sum_out(&["B"]).unwrap();
        let q = g.divide(&s).unwrap();
        assert_eq!(q.values(), &[0.0, 0.0, 0.25, 0.75]);
    }
}
