use crate::coalition::Coalition;
use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

/// Shared formula node.
pub type F = Arc<Formula>;

/// Modal formulas with coalition modalities.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Formula {
    Top,
    Bot,
    Prop(usize),
    Not(F),
    And(Vec<F>),
    Or(Vec<F>),
    Box(Coalition, F),
    Diamond(Coalition, F),
}

pub fn top() -> F {
    Arc::new(Formula::Top)
}

pub fn bot() -> F {
    Arc::new(Formula::Bot)
}

pub fn prop(i: usize) -> F {
    Arc::new(Formula::Prop(i))
}

pub fn not(f: F) -> F {
    Arc::new(Formula::Not(f))
}

/// Conjunction; collapses to `T` or to the single operand for short lists.
pub fn and(mut fs: Vec<F>) -> F {
    match fs.len() {
        0 => top(),
        1 => fs.pop().unwrap(),
        _ => Arc::new(Formula::And(fs)),
    }
}

/// Disjunction; collapses to `F` or to the single operand for short lists.
pub fn or(mut fs: Vec<F>) -> F {
    match fs.len() {
        0 => bot(),
        1 => fs.pop().unwrap(),
        _ => Arc::new(Formula::Or(fs)),
    }
}

pub fn boxed(alpha: Coalition, f: F) -> F {
    Arc::new(Formula::Box(alpha, f))
}

pub fn diamond(alpha: Coalition, f: F) -> F {
    Arc::new(Formula::Diamond(alpha, f))
}

pub fn implies(a: F, b: F) -> F {
    Arc::new(Formula::Or(vec![not(a), b]))
}

impl Formula {
    pub fn children(&self) -> Vec<&F> {
        match self {
            Formula::Top | Formula::Bot | Formula::Prop(_) => vec![],
            Formula::Not(f) | Formula::Box(_, f) | Formula::Diamond(_, f) => vec![f],
            Formula::And(fs) | Formula::Or(fs) => fs.iter().collect(),
        }
    }
}

/// Maximal nesting of modal operators.
pub fn modal_depth(f: &Formula) -> usize {
    let mut memo = HashMap::new();
    depth_memo(f, &mut memo)
}

fn depth_memo(f: &Formula, memo: &mut HashMap<*const Formula, usize>) -> usize {
    let key = f as *const Formula;
    if let Some(&d) = memo.get(&key) {
        return d;
    }
    let d = match f {
        Formula::Box(_, g) | Formula::Diamond(_, g) => 1 + depth_memo(g, memo),
        _ => f
            .children()
            .into_iter()
            .map(|g| depth_memo(g, memo))
            .max()
            .unwrap_or(0),
    };
    memo.insert(key, d);
    d
}

/// Number of distinct nodes in the formula DAG.
pub fn dag_size(f: &F) -> usize {
    let mut seen = std::collections::HashSet::new();
    let mut stack = vec![f.clone()];
    while let Some(g) = stack.pop() {
        if seen.insert(Arc::as_ptr(&g)) {
            stack.extend(g.children().into_iter().cloned());
        }
    }
    seen.len()
}

/// Hash-consing table: structurally equal nodes built through it share storage.
#[derive(Default)]
pub struct Interner {
    table: HashMap<NodeKey, F>,
}

#[derive(PartialEq, Eq, Hash)]
enum NodeKey {
    Top,
    Bot,
    Prop(usize),
    Not(usize),
    And(Vec<usize>),
    Or(Vec<usize>),
    Box(u8, usize),
    Diamond(u8, usize),
}

fn ptr(f: &F) -> usize {
    Arc::as_ptr(f) as usize
}

impl Interner {
    pub fn new() -> Self {
        Self::default()
    }

    /// Intern a node whose children are already interned.
    pub fn intern(&mut self, node: Formula) -> F {
        let key = match &node {
            Formula::Top => NodeKey::Top,
            Formula::Bot => NodeKey::Bot,
            Formula::Prop(i) => NodeKey::Prop(*i),
            Formula::Not(g) => NodeKey::Not(ptr(g)),
            Formula::And(gs) => NodeKey::And(gs.iter().map(ptr).collect()),
            Formula::Or(gs) => NodeKey::Or(gs.iter().map(ptr).collect()),
            Formula::Box(a, g) => NodeKey::Box(a.mask(), ptr(g)),
            Formula::Diamond(a, g) => NodeKey::Diamond(a.mask(), ptr(g)),
        };
        self.table.entry(key).or_insert_with(|| Arc::new(node)).clone()
    }

    pub fn and(&mut self, mut fs: Vec<F>) -> F {
        match fs.len() {
            0 => self.intern(Formula::Top),
            1 => fs.pop().unwrap(),
            _ => self.intern(Formula::And(fs)),
        }
    }

    pub fn or(&mut self, mut fs: Vec<F>) -> F {
        match fs.len() {
            0 => self.intern(Formula::Bot),
            1 => fs.pop().unwrap(),
            _ => self.intern(Formula::Or(fs)),
        }
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }
}

/// Printing context: agent and proposition names.
pub struct Display<'a> {
    f: &'a Formula,
    agents: &'a [String],
    props: &'a [String],
}

impl Formula {
    pub fn display<'a>(&'a self, agents: &'a [String], props: &'a [String]) -> Display<'a> {
        Display { f: self, agents, props }
    }
}

const PREC_OR: u8 = 1;
const PREC_AND: u8 = 2;
const PREC_UNARY: u8 = 3;

impl Display<'_> {
    fn write(&self, f: &Formula, prec: u8, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        match f {
            Formula::Top => write!(out, "T"),
            Formula::Bot => write!(out, "F"),
            Formula::Prop(i) => match self.props.get(*i) {
                Some(name) => write!(out, "{name}"),
                None => write!(out, "p{i}"),
            },
            Formula::Not(g) => {
                write!(out, "~")?;
                self.write(g, PREC_UNARY, out)
            }
            Formula::Box(a, g) => {
                write!(out, "[{}]", a.names(self.agents))?;
                self.write(g, PREC_UNARY, out)
            }
            Formula::Diamond(a, g) => {
                write!(out, "<{}>", a.names(self.agents))?;
                self.write(g, PREC_UNARY, out)
            }
            Formula::And(gs) | Formula::Or(gs) => {
                let (own, sep) = if matches!(f, Formula::And(_)) {
                    (PREC_AND, " & ")
                } else {
                    (PREC_OR, " | ")
                };
                let paren = prec >= own;
                if paren {
                    write!(out, "(")?;
                }
                for (i, g) in gs.iter().enumerate() {
                    if i > 0 {
                        write!(out, "{sep}")?;
                    }
                    // A child of the same connective gets parentheses so the
                    // n-ary list shape survives re-parsing.
                    self.write(g, own, out)?;
                }
                if paren {
                    write!(out, ")")?;
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for Display<'_> {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write(self.f, 0, out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn depth() {
        let a = Coalition::singleton(0);
        assert_eq!(modal_depth(&top()), 0);
        assert_eq!(modal_depth(&boxed(a, prop(0))), 1);
        assert_eq!(modal_depth(&diamond(a, boxed(a, prop(0)))), 2);
    }

    #[test]
    fn interner_shares() {
        let mut it = Interner::new();
        let p = it.intern(Formula::Prop(0));
        let q = it.intern(Formula::Prop(0));
        assert!(Arc::ptr_eq(&p, &q));
        let n1 = it.intern(Formula::Not(p.clone()));
        let n2 = it.intern(Formula::Not(q));
        assert!(Arc::ptr_eq(&n1, &n2));
    }
}
