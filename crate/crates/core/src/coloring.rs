//! Colorings of projective points (or of nonzero points) of `F_p^n`.

use crate::error::{Error, Result};
use crate::group::{GroupSpec, Point};

/// What a coloring assigns colors to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ColoringDomain {
    /// One color per 1-dimensional subspace; `x` and `c·x` share a color.
    Projective,
    /// One color per nonzero point. Only differs from `Projective` when `p > 2`.
    Points,
}

/// An `r`-coloring with colors `1..=r`.
///
/// Colors are stored densely by element index; entries that are not
/// colored (0, and non-canonical points in the projective domain) hold 0.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Coloring {
    spec: GroupSpec,
    r: u8,
    domain: ColoringDomain,
    colors: Vec<u8>,
}

impl Coloring {
    /// Builds a coloring from `f`, evaluated on canonical projective
    /// representatives (or on every nonzero point for [`ColoringDomain::Points`]).
    pub fn from_fn(
        spec: GroupSpec,
        r: u8,
        domain: ColoringDomain,
        mut f: impl FnMut(Point) -> u8,
    ) -> Result<Self> {
        if r == 0 {
            return Err(Error::range("color count", "r must be at least 1"));
        }
        let mut colors = vec![0u8; spec.order() as usize];
        for x in 1..spec.order() {
            if domain == ColoringDomain::Projective && spec.projective_rep(x) != Some(x) {
                continue;
            }
            let c = f(x);
            if c == 0 || c > r {
                return Err(Error::range("color", format!("{c} not in 1..={r}")));
            }
            colors[x as usize] = c;
        }
        Ok(Coloring {
            spec,
            r,
            domain,
            colors,
        })
    }

    /// Colors listed in the order of the canonical domain points.
    pub fn from_list(spec: GroupSpec, r: u8, domain: ColoringDomain, list: &[u8]) -> Result<Self> {
        let pts = domain_points(spec, domain);
        if pts.len() != list.len() {
            return Err(Error::Format(format!(
                "coloring lists {} colors but the domain has {} points",
                list.len(),
                pts.len()
            )));
        }
        let mut it = list.iter();
        Coloring::from_fn(spec, r, domain, |_| *it.next().unwrap())
    }

    pub fn spec(&self) -> GroupSpec {
        self.spec
    }

    pub fn r(&self) -> u8 {
        self.r
    }

    pub fn domain(&self) -> ColoringDomain {
        self.domain
    }

    /// Color of the nonzero point `x` (through its projective class if needed).
    pub fn color(&self, x: Point) -> Option<u8> {
        if x == 0 || !self.spec.contains(x) {
            return None;
        }
        let key = match self.domain {
            ColoringDomain::Projective => self.spec.projective_rep(x)?,
            ColoringDomain::Points => x,
        };
        Some(self.colors[key as usize])
    }

    /// Canonical domain points in increasing order.
    pub fn points(&self) -> Vec<Point> {
        domain_points(self.spec, self.domain)
    }

    /// Colors in the order of [`Coloring::points`].
    pub fn to_list(&self) -> Vec<u8> {
        self.points().iter().map(|&x| self.colors[x as usize]).collect()
    }

    /// Nonzero points (all of them, not just representatives) with color `c`.
    pub fn class(&self, c: u8) -> Vec<Point> {
        (1..self.spec.order()).filter(|&x| self.color(x) == Some(c)).collect()
    }
}

/// Canonical points of a domain: projective representatives (leading
/// digit 1) or all nonzero points.
pub fn domain_points(spec: GroupSpec, domain: ColoringDomain) -> Vec<Point> {
    (1..spec.order())
        .filter(|&x| domain == ColoringDomain::Points || spec.projective_rep(x) == Some(x))
        .collect()
}
