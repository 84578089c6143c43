//! Combinatorial class expressions and their generating functions.
//!
//! A [`GrammarSystem`] is a set of named equations over [`ClassExpr`]. The
//! same system is read two ways. The labeled reading produces exponential
//! generating functions, with `Set` as the exponential. The unlabeled reading
//! produces ordinary generating functions, with `Set` as the multiset
//! construction.
//!
//! Systems are solved online, one order at a time. At order `n` every node
//! first folds everything that only involves coefficients below `n` (all the
//! convolutions). Cheap sweeps then add the boundary terms that involve
//! order-`n` coefficients of other nodes, until the equation values stop
//! moving. Well-foundedness guarantees this takes at most one sweep per
//! equation plus one to confirm.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use indexmap::IndexMap;
use thiserror::Error;

use crate::powerseries::Series;
use crate::scalar::{Field, Scalar};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ClassExpr {
    /// The class with one object of size one.
    Atom,
    /// The class with one object of size zero.
    Epsilon,
    Sum(Vec<ClassExpr>),
    Product(Vec<ClassExpr>),
    SetAtLeast(usize, Box<ClassExpr>),
    SetExactly(usize, Box<ClassExpr>),
    SeqAtLeast(usize, Box<ClassExpr>),
    Ref(String),
}

impl ClassExpr {
    pub fn atom() -> Self {
        ClassExpr::Atom
    }

    pub fn epsilon() -> Self {
        ClassExpr::Epsilon
    }

    pub fn reference(name: &str) -> Self {
        ClassExpr::Ref(name.to_string())
    }

    pub fn sum<I: IntoIterator<Item = ClassExpr>>(terms: I) -> Self {
        ClassExpr::Sum(terms.into_iter().collect())
    }

    pub fn product<I: IntoIterator<Item = ClassExpr>>(factors: I) -> Self {
        ClassExpr::Product(factors.into_iter().collect())
    }

    pub fn set_at_least(k: usize, arg: ClassExpr) -> Self {
        ClassExpr::SetAtLeast(k, Box::new(arg))
    }

    pub fn set_exactly(k: usize, arg: ClassExpr) -> Self {
        ClassExpr::SetExactly(k, Box::new(arg))
    }

    pub fn seq_at_least(k: usize, arg: ClassExpr) -> Self {
        ClassExpr::SeqAtLeast(k, Box::new(arg))
    }

    fn visit_refs<'a>(&'a self, f: &mut impl FnMut(&'a str)) {
        match self {
            ClassExpr::Atom | ClassExpr::Epsilon => {}
            ClassExpr::Ref(name) => f(name),
            ClassExpr::Sum(xs) | ClassExpr::Product(xs) => xs.iter().for_each(|x| x.visit_refs(f)),
            ClassExpr::SetAtLeast(_, a) | ClassExpr::SetExactly(_, a) | ClassExpr::SeqAtLeast(_, a) => a.visit_refs(f),
        }
    }
}

impl fmt::Display for ClassExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn join(f: &mut fmt::Formatter<'_>, xs: &[ClassExpr], sep: &str) -> fmt::Result {
            for (i, x) in xs.iter().enumerate() {
                if i > 0 {
                    f.write_str(sep)?;
                }
                match x {
                    ClassExpr::Sum(_) | ClassExpr::Product(_) => write!(f, "({x})")?,
                    _ => write!(f, "{x}")?,
                }
            }
            Ok(())
        }
        match self {
            ClassExpr::Atom => f.write_str("Z"),
            ClassExpr::Epsilon => f.write_str("1"),
            ClassExpr::Ref(name) => f.write_str(name),
            ClassExpr::Sum(xs) if xs.is_empty() => f.write_str("0"),
            ClassExpr::Sum(xs) => join(f, xs, " + "),
            ClassExpr::Product(xs) if xs.is_empty() => f.write_str("1"),
            ClassExpr::Product(xs) => join(f, xs, " * "),
            ClassExpr::SetAtLeast(k, a) => write!(f, "Set>={k}({a})"),
            ClassExpr::SetExactly(k, a) => write!(f, "Set{k}({a})"),
            ClassExpr::SeqAtLeast(k, a) => write!(f, "Seq>={k}({a})"),
        }
    }
}

/// Named equations, the names whose series are of interest, and the names
/// the author declares to be recursive.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GrammarSystem {
    equations: IndexMap<String, ClassExpr>,
    outputs: Vec<String>,
    recursive: BTreeSet<String>,
}

impl GrammarSystem {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds or replaces the equation for `name`.
    pub fn define(&mut self, name: &str, expr: ClassExpr) -> &mut Self {
        self.equations.insert(name.to_string(), expr);
        self
    }

    pub fn output(&mut self, name: &str) -> &mut Self {
        if !self.outputs.iter().any(|o| o == name) {
            self.outputs.push(name.to_string());
        }
        self
    }

    pub fn declare_recursive(&mut self, name: &str) -> &mut Self {
        self.recursive.insert(name.to_string());
        self
    }

    pub fn equations(&self) -> &IndexMap<String, ClassExpr> {
        &self.equations
    }

    pub fn equation(&self, name: &str) -> Option<&ClassExpr> {
        self.equations.get(name)
    }

    pub fn outputs(&self) -> &[String] {
        &self.outputs
    }

    pub fn recursive(&self) -> &BTreeSet<String> {
        &self.recursive
    }

    /// Checks that the system defines every class uniquely. Violations are
    /// collected rather than returned at the first one.
    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        for (name, expr) in &self.equations {
            expr.visit_refs(&mut |target| {
                if !self.equations.contains_key(target) {
                    violations
                        .push(Violation::UnresolvedReference { equation: name.clone(), target: target.to_string() });
                }
            });
        }
        for o in &self.outputs {
            if !self.equations.contains_key(o) {
                violations.push(Violation::UnknownOutput(o.clone()));
            }
        }
        if !violations.is_empty() {
            return ValidationReport { violations };
        }

        let vals = self.valuations();
        for (name, expr) in &self.equations {
            check_arguments(name, expr, &vals, &self.equations, &mut violations);
        }

        let unguarded = self.dependency_graph(&vals, true);
        if let Some(cycle) = find_cycle(&unguarded) {
            let names = self.equations.keys().cloned().collect::<Vec<_>>();
            violations.push(Violation::IllFounded { cycle: cycle.into_iter().map(|i| names[i].clone()).collect() });
        }

        let all = self.dependency_graph(&vals, false);
        let on_cycle = nodes_on_cycles(&all);
        for (i, name) in self.equations.keys().enumerate() {
            if on_cycle[i] && !self.recursive.contains(name) {
                violations.push(Violation::UndeclaredRecursion(name.clone()));
            }
        }
        ValidationReport { violations }
    }

    /// Valuation of each equation, as the least fixpoint from infinity.
    /// `usize::MAX` stands for an empty class.
    fn valuations(&self) -> Vec<usize> {
        let index: HashMap<&str, usize> = self.equations.keys().enumerate().map(|(i, k)| (k.as_str(), i)).collect();
        let mut vals = vec![usize::MAX; self.equations.len()];
        loop {
            let mut changed = false;
            for (i, expr) in self.equations.values().enumerate() {
                let v = valuation(expr, &vals, &index);
                if v < vals[i] {
                    vals[i] = v;
                    changed = true;
                }
            }
            if !changed {
                return vals;
            }
        }
    }

    fn dependency_graph(&self, vals: &[usize], unguarded_only: bool) -> Vec<Vec<usize>> {
        let index: HashMap<&str, usize> = self.equations.keys().enumerate().map(|(i, k)| (k.as_str(), i)).collect();
        self.equations
            .values()
            .map(|expr| {
                let mut deps = Vec::new();
                collect_deps(expr, vals, &index, unguarded_only, &mut deps);
                deps.sort_unstable();
                deps.dedup();
                deps
            })
            .collect()
    }
}

fn valuation(expr: &ClassExpr, vals: &[usize], index: &HashMap<&str, usize>) -> usize {
    let times = |k: usize, v: usize| if k == 0 { 0 } else { v.saturating_mul(k) };
    match expr {
        ClassExpr::Atom => 1,
        ClassExpr::Epsilon => 0,
        ClassExpr::Ref(n) => index.get(n.as_str()).map_or(usize::MAX, |&i| vals[i]),
        ClassExpr::Sum(xs) => xs.iter().map(|x| valuation(x, vals, index)).min().unwrap_or(usize::MAX),
        ClassExpr::Product(xs) => xs.iter().map(|x| valuation(x, vals, index)).fold(0usize, |a, b| a.saturating_add(b)),
        ClassExpr::SetAtLeast(k, a) | ClassExpr::SetExactly(k, a) | ClassExpr::SeqAtLeast(k, a) => {
            times(*k, valuation(a, vals, index))
        }
    }
}

fn check_arguments(
    equation: &str,
    expr: &ClassExpr,
    vals: &[usize],
    eqs: &IndexMap<String, ClassExpr>,
    out: &mut Vec<Violation>,
) {
    let index: HashMap<&str, usize> = eqs.keys().enumerate().map(|(i, k)| (k.as_str(), i)).collect();
    fn walk(equation: &str, expr: &ClassExpr, vals: &[usize], index: &HashMap<&str, usize>, out: &mut Vec<Violation>) {
        match expr {
            ClassExpr::Atom | ClassExpr::Epsilon | ClassExpr::Ref(_) => {}
            ClassExpr::Sum(xs) | ClassExpr::Product(xs) => xs.iter().for_each(|x| walk(equation, x, vals, index, out)),
            ClassExpr::SetAtLeast(_, a) | ClassExpr::SetExactly(_, a) | ClassExpr::SeqAtLeast(_, a) => {
                if valuation(a, vals, index) == 0 {
                    out.push(Violation::ArgumentHasEmptyObject {
                        equation: equation.to_string(),
                        argument: a.to_string(),
                    });
                }
                walk(equation, a, vals, index, out);
            }
        }
    }
    walk(equation, expr, vals, &index, out);
}

/// Collects the equations `expr` depends on. With `unguarded_only`, a
/// dependency counts only if the order-`n` coefficient of `expr` can depend on
/// the order-`n` coefficient of the referenced class.
fn collect_deps(
    expr: &ClassExpr,
    vals: &[usize],
    index: &HashMap<&str, usize>,
    unguarded_only: bool,
    out: &mut Vec<usize>,
) {
    match expr {
        ClassExpr::Atom | ClassExpr::Epsilon => {}
        ClassExpr::Ref(n) => out.extend(index.get(n.as_str())),
        ClassExpr::Sum(xs) => xs.iter().for_each(|x| collect_deps(x, vals, index, unguarded_only, out)),
        ClassExpr::Product(xs) => {
            for (i, x) in xs.iter().enumerate() {
                let guarded = xs.iter().enumerate().any(|(j, y)| j != i && valuation(y, vals, index) >= 1);
                if !(unguarded_only && guarded) {
                    collect_deps(x, vals, index, unguarded_only, out);
                }
            }
        }
        ClassExpr::SetExactly(0, _) if unguarded_only => {}
        ClassExpr::SetAtLeast(k, a) | ClassExpr::SetExactly(k, a) | ClassExpr::SeqAtLeast(k, a) => {
            if !(unguarded_only && *k >= 2) {
                collect_deps(a, vals, index, unguarded_only, out);
            }
        }
    }
}

fn find_cycle(graph: &[Vec<usize>]) -> Option<Vec<usize>> {
    // 0 = unvisited, 1 = on stack, 2 = done
    fn dfs(v: usize, g: &[Vec<usize>], color: &mut [u8], stack: &mut Vec<usize>) -> Option<Vec<usize>> {
        color[v] = 1;
        stack.push(v);
        for &w in &g[v] {
            if color[w] == 1 {
                let start = stack.iter().position(|&x| x == w).expect("on stack");
                return Some(stack[start..].to_vec());
            }
            if color[w] == 0 {
                if let Some(c) = dfs(w, g, color, stack) {
                    return Some(c);
                }
            }
        }
        stack.pop();
        color[v] = 2;
        None
    }
    let mut color = vec![0u8; graph.len()];
    for v in 0..graph.len() {
        if color[v] == 0 {
            if let Some(c) = dfs(v, graph, &mut color, &mut Vec::new()) {
                return Some(c);
            }
        }
    }
    None
}

fn nodes_on_cycles(graph: &[Vec<usize>]) -> Vec<bool> {
    let n = graph.len();
    (0..n)
        .map(|v| {
            // v lies on a cycle iff v is reachable from one of its successors
            let mut seen = vec![false; n];
            let mut stack: Vec<usize> = graph[v].clone();
            while let Some(w) = stack.pop() {
                if w == v {
                    return true;
                }
                if !seen[w] {
                    seen[w] = true;
                    stack.extend(&graph[w]);
                }
            }
            false
        })
        .collect()
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn violations(&self) -> &[Violation] {
        &self.violations
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationReport {
    violations: Vec<Violation>,
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return f.write_str("valid");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Violation {
    #[error("`{equation}` refers to undefined class `{target}`")]
    UnresolvedReference { equation: String, target: String },
    #[error("output `{0}` has no equation")]
    UnknownOutput(String),
    #[error("in `{equation}`, argument `{argument}` contains an object of size zero")]
    ArgumentHasEmptyObject { equation: String, argument: String },
    #[error("unguarded dependency cycle through {cycle:?}")]
    IllFounded { cycle: Vec<String> },
    #[error("`{0}` is recursive but not declared so")]
    UndeclaredRecursion(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpeciesError {
    #[error("invalid grammar system: {0}")]
    Invalid(ValidationReport),
    #[error("coefficient {order} of `{equation}` did not stabilize")]
    DivergentSystem { equation: String, order: usize },
}

pub type SeriesMap<T> = IndexMap<String, Series<T>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Semantics {
    Labeled,
    Unlabeled,
}

/// Exponential generating functions of every class in `sys`, through
/// `z^order`.
pub fn translate_labeled<T: Field>(sys: &GrammarSystem, order: usize) -> Result<SeriesMap<T>, SpeciesError> {
    checked(sys)?;
    solve_unchecked(sys, order, Semantics::Labeled)
}

/// Ordinary generating functions of the unlabeled classes in `sys`, through
/// `z^order`. Integer coefficient rings suffice.
pub fn translate_unlabeled<T: Scalar>(sys: &GrammarSystem, order: usize) -> Result<SeriesMap<T>, SpeciesError> {
    checked(sys)?;
    Solver::<T>::compile(sys, Semantics::Unlabeled).run(order)
}

fn checked(sys: &GrammarSystem) -> Result<(), SpeciesError> {
    let report = sys.validate();
    if report.is_valid() {
        Ok(())
    } else {
        Err(SpeciesError::Invalid(report))
    }
}

/// Solves `sys` without checking well-foundedness first. References must
/// still resolve. An ill-founded system surfaces as
/// [`SpeciesError::DivergentSystem`] unless it happens to have a fixpoint.
pub fn solve_unchecked<T: Field>(
    sys: &GrammarSystem,
    order: usize,
    semantics: Semantics,
) -> Result<SeriesMap<T>, SpeciesError> {
    let report = sys.validate();
    if report.violations().iter().any(|v| matches!(v, Violation::UnresolvedReference { .. })) {
        return Err(SpeciesError::Invalid(report));
    }
    Solver::<T>::compile(sys, semantics).run(order)
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum Op {
    Atom,
    Epsilon,
    /// Alias for the root of an equation.
    Ref(usize),
    Sum(Vec<usize>),
    /// `base - Σ minus`.
    Difference(usize, Vec<usize>),
    Product(usize, usize),
    Square(usize),
    /// `exp` of the argument in labeled semantics, the Pólya exponential in
    /// unlabeled semantics.
    Exp(usize),
    /// Sets of exactly two elements, read off the square of the argument.
    Pairs {
        arg: usize,
        square: usize,
    },
    /// Sets of exactly `lower.len() ≥ 3` elements; `lower[r]` holds sets of
    /// exactly `r` elements.
    SetExactly {
        arg: usize,
        lower: Vec<usize>,
    },
    /// `R = head + arg·R`, with `head` the first power of `arg` allowed.
    Seq {
        arg: usize,
        head: usize,
    },
}

#[derive(Default)]
struct State<T> {
    /// Everything in the order-`n` coefficient that only involves lower
    /// orders.
    inner: Option<T>,
    /// `Exp` only: `k·a_k`, plus `Σ_{d|k, d<k} d·a_d` when unlabeled.
    weighted: Vec<T>,
    divisor_part: Option<T>,
}

struct Solver<'s, T> {
    sys: &'s GrammarSystem,
    semantics: Semantics,
    ops: Vec<Op>,
    vals: Vec<Vec<T>>,
    states: Vec<State<T>>,
    /// Node of each equation's expression, possibly an alias.
    roots: Vec<usize>,
    interned: HashMap<Op, usize>,
}

impl<'s, T: Scalar> Solver<'s, T> {
    fn compile(sys: &'s GrammarSystem, semantics: Semantics) -> Self {
        let index: HashMap<&str, usize> = sys.equations.keys().enumerate().map(|(i, k)| (k.as_str(), i)).collect();
        let mut solver = Solver {
            sys,
            semantics,
            ops: Vec::new(),
            vals: Vec::new(),
            states: Vec::new(),
            roots: Vec::new(),
            interned: HashMap::new(),
        };
        for expr in sys.equations.values() {
            let root = solver.lower(expr, &index);
            solver.roots.push(root);
        }
        solver
    }

    /// Structurally equal operations share one node, so repeated
    /// subexpressions are evaluated once.
    fn node(&mut self, op: Op) -> usize {
        if let Some(&i) = self.interned.get(&op) {
            return i;
        }
        self.ops.push(op.clone());
        self.vals.push(Vec::new());
        self.states.push(State { inner: None, weighted: Vec::new(), divisor_part: None });
        let i = self.ops.len() - 1;
        self.interned.insert(op, i);
        i
    }

    fn multiply(&mut self, a: usize, b: usize) -> usize {
        if a == b {
            self.node(Op::Square(a))
        } else {
            self.node(Op::Product(a.min(b), a.max(b)))
        }
    }

    fn set_exactly(&mut self, j: usize, arg: usize) -> usize {
        match j {
            0 => self.node(Op::Epsilon),
            1 => arg,
            2 => {
                let square = self.node(Op::Square(arg));
                self.node(Op::Pairs { arg, square })
            }
            _ => {
                let lower = (0..j).map(|r| self.set_exactly(r, arg)).collect();
                self.node(Op::SetExactly { arg, lower })
            }
        }
    }

    fn power(&mut self, k: usize, arg: usize) -> usize {
        match k {
            0 => self.node(Op::Epsilon),
            1 => arg,
            _ => {
                let rest = self.power(k - 1, arg);
                self.multiply(arg, rest)
            }
        }
    }

    fn lower(&mut self, expr: &ClassExpr, index: &HashMap<&str, usize>) -> usize {
        match expr {
            ClassExpr::Atom => self.node(Op::Atom),
            ClassExpr::Epsilon => self.node(Op::Epsilon),
            ClassExpr::Ref(name) => self.node(Op::Ref(index[name.as_str()])),
            ClassExpr::Sum(xs) if xs.len() == 1 => self.lower(&xs[0], index),
            ClassExpr::Sum(xs) => {
                let children = xs.iter().map(|x| self.lower(x, index)).collect();
                self.node(Op::Sum(children))
            }
            ClassExpr::Product(xs) => {
                let Some((first, rest)) = xs.split_first() else {
                    return self.node(Op::Epsilon);
                };
                let mut acc = self.lower(first, index);
                for x in rest {
                    let rhs = self.lower(x, index);
                    acc = self.multiply(acc, rhs);
                }
                acc
            }
            ClassExpr::SetAtLeast(k, a) => {
                let arg = self.lower(a, index);
                let exp = self.node(Op::Exp(arg));
                if *k == 0 {
                    return exp;
                }
                let minus = (0..*k).map(|j| self.set_exactly(j, arg)).collect();
                self.node(Op::Difference(exp, minus))
            }
            ClassExpr::SetExactly(k, a) => {
                let arg = self.lower(a, index);
                self.set_exactly(*k, arg)
            }
            ClassExpr::SeqAtLeast(k, a) => {
                let arg = self.lower(a, index);
                let head = self.power(*k, arg);
                self.node(Op::Seq { arg, head })
            }
        }
    }

    /// Follows aliases to a node that stores coefficients.
    fn resolve(&self, mut node: usize) -> Option<usize> {
        for _ in 0..=self.ops.len() {
            match self.ops[node] {
                Op::Ref(eq) => node = self.roots[eq],
                _ => return Some(node),
            }
        }
        None
    }

    fn run(mut self, order: usize) -> Result<SeriesMap<T>, SpeciesError> {
        let mut targets = Vec::with_capacity(self.ops.len());
        for i in 0..self.ops.len() {
            match self.resolve(i) {
                Some(t) => targets.push(t),
                None => {
                    let eq = (0..self.roots.len()).find(|&e| self.resolve(self.roots[e]).is_none()).unwrap_or(0);
                    return Err(self.divergent(eq, 0));
                }
            }
        }
        for op in &mut self.ops {
            remap(op, &targets);
        }
        let roots: Vec<usize> = self.roots.iter().map(|&r| targets[r]).collect();
        let max_passes = self.sys.equations.len() + 2;

        for n in 0..=order {
            for (op, vals) in self.ops.iter().zip(&mut self.vals) {
                let v = match op {
                    Op::Atom if n == 1 => T::one(),
                    Op::Epsilon if n == 0 => T::one(),
                    _ => T::zero(),
                };
                vals.push(v);
            }
            for i in 0..self.ops.len() {
                self.prepare(i, n);
            }
            let mut settled = false;
            let mut moving = 0;
            for _ in 0..max_passes {
                let before: Vec<T> = roots.iter().map(|&r| self.vals[r][n].clone()).collect();
                for i in 0..self.ops.len() {
                    self.finish(i, n);
                }
                match roots.iter().zip(&before).position(|(&r, b)| &self.vals[r][n] != b) {
                    None => {
                        settled = true;
                        break;
                    }
                    Some(e) => moving = e,
                }
            }
            if !settled {
                return Err(self.divergent(moving, n));
            }
        }

        Ok(self
            .sys
            .equations
            .keys()
            .zip(&roots)
            .map(|(name, &r)| (name.clone(), Series::from_coeffs(std::mem::take(&mut self.vals[r]))))
            .collect())
    }

    fn divergent(&self, equation: usize, order: usize) -> SpeciesError {
        let equation = self.sys.equations.get_index(equation).map(|(k, _)| k.clone()).unwrap_or_default();
        SpeciesError::DivergentSystem { equation, order }
    }

    fn prepare(&mut self, i: usize, n: usize) {
        let labeled = self.semantics == Semantics::Labeled;
        let vals = &self.vals;
        let state = &mut self.states[i];
        match &self.ops[i] {
            Op::Product(a, b) => {
                let (a, b) = (&vals[*a], &vals[*b]);
                state.inner = Some(if n >= 2 { T::dot_rev(&a[1..n], &b[1..n]) } else { T::zero() });
            }
            Op::Square(a) => state.inner = Some(square_inner(&vals[*a], n)),
            Op::Exp(a) => {
                state.weighted.push(T::zero());
                if n >= 1 {
                    let e = &vals[i];
                    let mut s = T::dot_rev(&state.weighted[1..n], &e[1..n]);
                    if !labeled {
                        let d = proper_divisor_sum(&vals[*a], n);
                        s += &d;
                        state.divisor_part = Some(d);
                    }
                    state.inner = Some(s.div_u64(n as u64));
                }
            }
            Op::SetExactly { arg, lower } if n >= 1 => {
                let a = &vals[*arg];
                let j = lower.len();
                let v = if labeled {
                    T::dot_rev(&a[1..n], &vals[lower[j - 1]][1..n]).div_u64(j as u64)
                } else {
                    let parts: Vec<&[T]> = lower.iter().map(|&l| vals[l].as_slice()).collect();
                    unlabeled_set_part(a, &parts, n)
                };
                state.inner = Some(v);
            }
            Op::Seq { arg, .. } if n >= 1 => {
                state.inner = Some(T::dot_rev(&vals[*arg][1..n], &vals[i][1..n]));
            }
            _ => {}
        }
    }

    fn finish(&mut self, i: usize, n: usize) {
        let labeled = self.semantics == Semantics::Labeled;
        let vals = &self.vals;
        let state = &mut self.states[i];
        let inner = || state.inner.clone().expect("prepared");
        let value = match &self.ops[i] {
            Op::Atom | Op::Epsilon | Op::Ref(_) => return,
            Op::Sum(xs) => {
                let mut s = T::zero();
                for &x in xs {
                    s += &vals[x][n];
                }
                s
            }
            Op::Difference(base, minus) => {
                let mut s = vals[*base][n].clone();
                for &x in minus {
                    s -= &vals[x][n];
                }
                s
            }
            Op::Product(a, b) => {
                let (a, b) = (&vals[*a], &vals[*b]);
                if n == 0 {
                    a[0].mul_ref(&b[0])
                } else {
                    let mut s = inner();
                    if !a[0].is_zero() {
                        s += &a[0].mul_ref(&b[n]);
                    }
                    if !b[0].is_zero() {
                        s += &a[n].mul_ref(&b[0]);
                    }
                    s
                }
            }
            Op::Square(a) => {
                let a = &vals[*a];
                if n == 0 {
                    a[0].mul_ref(&a[0])
                } else {
                    let mut s = inner();
                    if !a[0].is_zero() {
                        let t = a[0].mul_ref(&a[n]);
                        s += &t;
                        s += &t;
                    }
                    s
                }
            }
            Op::Exp(a) => {
                if n == 0 {
                    T::one()
                } else {
                    let an = &vals[*a][n];
                    let mut w = an.mul_ref(&T::from_u64(n as u64));
                    if let Some(d) = &state.divisor_part {
                        w += d;
                    }
                    let mut e = inner();
                    e += an;
                    state.weighted[n] = w;
                    e
                }
            }
            Op::Pairs { arg, square } => {
                if n == 0 {
                    T::zero()
                } else {
                    let mut s = vals[*square][n].clone();
                    if !labeled && n.is_multiple_of(2) {
                        s += &vals[*arg][n / 2];
                    }
                    s.div_u64(2)
                }
            }
            Op::SetExactly { .. } => {
                if n == 0 {
                    T::zero()
                } else {
                    inner()
                }
            }
            Op::Seq { arg, head } => {
                let r0 = vals[*head][0].clone();
                if n == 0 {
                    r0
                } else {
                    let mut s = vals[*head][n].clone();
                    s += &inner();
                    if !r0.is_zero() {
                        s += &vals[*arg][n].mul_ref(&r0);
                    }
                    s
                }
            }
        };
        self.vals[i][n] = value;
    }
}

fn remap(op: &mut Op, targets: &[usize]) {
    let f = |x: &mut usize| *x = targets[*x];
    match op {
        Op::Atom | Op::Epsilon | Op::Ref(_) => {}
        Op::Sum(xs) => xs.iter_mut().for_each(f),
        Op::Difference(b, xs) => {
            f(b);
            xs.iter_mut().for_each(f);
        }
        Op::Product(a, b) | Op::Pairs { arg: a, square: b } | Op::Seq { arg: a, head: b } => {
            f(a);
            f(b);
        }
        Op::Square(a) | Op::Exp(a) => f(a),
        Op::SetExactly { arg, lower } => {
            f(arg);
            lower.iter_mut().for_each(f);
        }
    }
}

/// `Σ_{k=1}^{n-1} a_k·a_{n-k}`, using the symmetry of the sum.
fn square_inner<T: Scalar>(a: &[T], n: usize) -> T {
    if n < 2 {
        return T::zero();
    }
    let h = (n - 1) / 2;
    let mut s = T::dot_rev(&a[1..=h], &a[n - h..n]);
    let half = s.clone();
    s += &half;
    if n.is_multiple_of(2) {
        s += &a[n / 2].mul_ref(&a[n / 2]);
    }
    s
}

/// `Σ_{d | n, d < n} d·a_d`.
fn proper_divisor_sum<T: Scalar>(a: &[T], n: usize) -> T {
    let mut s = T::zero();
    let mut add = |d: usize| {
        if d < n && !a[d].is_zero() {
            s += &a[d].mul_ref(&T::from_u64(d as u64));
        }
    };
    let mut d = 1;
    while d * d <= n {
        if n.is_multiple_of(d) {
            add(d);
            if d * d != n {
                add(n / d);
            }
        }
        d += 1;
    }
    s
}

/// Order-`n` coefficient of the multisets of exactly `j = parts.len() ≥ 3`
/// elements, where `parts[r]` holds multisets of exactly `r`:
/// `j·S_j(n) = Σ_{i=1}^{j} Σ_{m ≥ 1} a_m·S_{j-i}(n - i·m)`.
/// Only coefficients below `n` are read.
fn unlabeled_set_part<T: Scalar>(a: &[T], parts: &[&[T]], n: usize) -> T {
    let j = parts.len();
    let mut s = T::dot_rev(&a[1..n], &parts[j - 1][1..n]);
    for i in 2..=j {
        let r = j - i;
        if r == 0 {
            if n.is_multiple_of(i) {
                s += &a[n / i];
            }
        } else {
            let p = parts[r];
            s += &T::dot((1..=n / i).map(|m| (&a[m], &p[n - i * m])));
        }
    }
    s.div_u64(j as u64)
}
