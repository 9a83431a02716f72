//! Red/blue(/grey) coloured hypercubes: vertex-coloured, edge-coloured,
//! partial (direction-0 edges grey) and tri-coloured (directions 0 and 1
//! grey) cubes, with isomorphism, subcube containment and densities.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use sha2::{Digest, Sha256};

use crate::canon::{Canonizer, GroupKind};
use crate::cube::{self, SignedPermutation};
use crate::error::{Error, Result};
use crate::rational::Rational;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Colour {
    Blue,
    Red,
    Grey,
}

impl Colour {
    pub fn as_char(self) -> char {
        match self {
            Colour::Blue => 'B',
            Colour::Red => 'R',
            Colour::Grey => 'G',
        }
    }

    pub fn from_char(c: char) -> Result<Colour> {
        match c {
            'B' => Ok(Colour::Blue),
            'R' => Ok(Colour::Red),
            'G' => Ok(Colour::Grey),
            _ => Err(Error::parse(format!("unknown colour `{c}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Mode {
    Vertex,
    Edge,
    Partial,
    TriEdge,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Vertex => "vertex",
            Mode::Edge => "edge",
            Mode::Partial => "partial",
            Mode::TriEdge => "triedge",
        }
    }

    /// Directions whose edges are grey; also the directions every
    /// isomorphism must fix.
    pub fn fixed_dirs(self) -> usize {
        match self {
            Mode::Vertex | Mode::Edge => 0,
            Mode::Partial => 1,
            Mode::TriEdge => 2,
        }
    }

    pub fn colours_edges(self) -> bool {
        self != Mode::Vertex
    }

    pub fn word_len(self, dim: usize) -> usize {
        match self {
            Mode::Vertex => 1 << dim,
            _ => cube::num_edges(dim),
        }
    }

    /// Grey positions are exactly the first `grey_positions(dim)` entries
    /// of the word (edges across directions below `fixed_dirs`).
    pub fn grey_positions(self, dim: usize) -> usize {
        match self {
            Mode::Vertex | Mode::Edge => 0,
            _ if dim == 0 => 0,
            _ => self.fixed_dirs().min(dim) << (dim - 1),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Mode> {
        match s {
            "vertex" => Ok(Mode::Vertex),
            "edge" => Ok(Mode::Edge),
            "partial" => Ok(Mode::Partial),
            "triedge" => Ok(Mode::TriEdge),
            _ => Err(Error::parse(format!("unknown mode `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CubeColouring {
    mode: Mode,
    dim: usize,
    word: Vec<Colour>,
}

impl CubeColouring {
    pub fn new(mode: Mode, dim: usize, word: Vec<Colour>) -> Result<Self> {
        let len = mode.word_len(dim);
        if word.len() != len {
            return Err(Error::Shape(format!(
                "{mode} cube of dimension {dim} needs {len} colours, got {}",
                word.len()
            )));
        }
        let grey = mode.grey_positions(dim);
        for (p, &c) in word.iter().enumerate() {
            if (c == Colour::Grey) != (p < grey) {
                return Err(Error::Shape(format!(
                    "{mode} cube of dimension {dim}: position {p} must {}be grey",
                    if p < grey { "" } else { "not " }
                )));
            }
        }
        if mode == Mode::Partial && dim == 0 {
            return Err(Error::Dimension("partial cubes need dimension >= 1".into()));
        }
        Ok(CubeColouring { mode, dim, word })
    }

    /// Cube with every non-grey position coloured `colour`.
    pub fn uniform(mode: Mode, dim: usize, colour: Colour) -> Self {
        let grey = mode.grey_positions(dim);
        let word = (0..mode.word_len(dim))
            .map(|p| if p < grey { Colour::Grey } else { colour })
            .collect();
        CubeColouring { mode, dim, word }
    }

    /// Vertex-coloured cube with the given vertices Red.
    pub fn vertex_with_red(dim: usize, red: &[cube::Vertex]) -> Self {
        let mut c = CubeColouring::uniform(Mode::Vertex, dim, Colour::Blue);
        for &v in red {
            c.word[v as usize] = Colour::Red;
        }
        c
    }

    /// Edge-coloured cube whose Blue edges are exactly `blue`, given as
    /// vertex pairs.
    pub fn edge_with_blue(dim: usize, blue: &[(cube::Vertex, cube::Vertex)]) -> Result<Self> {
        let mut c = CubeColouring::uniform(Mode::Edge, dim, Colour::Red);
        for &(u, v) in blue {
            if !cube::is_edge(u, v, dim)? {
                return Err(Error::Shape(format!("{u}{v} is not an edge of Q_{dim}")));
            }
            let d = (u ^ v).trailing_zeros() as usize;
            c.word[cube::edge_index(dim, u, d)] = Colour::Blue;
        }
        Ok(c)
    }

    pub(crate) fn from_parts_unchecked(mode: Mode, dim: usize, word: Vec<Colour>) -> Self {
        debug_assert_eq!(word.len(), mode.word_len(dim));
        CubeColouring { mode, dim, word }
    }

    pub(crate) fn set_position(&mut self, p: usize, colour: Colour) {
        debug_assert!(self.word[p] != Colour::Grey && colour != Colour::Grey);
        self.word[p] = colour;
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn word(&self) -> &[Colour] {
        &self.word
    }

    pub fn vertex_colour(&self, v: cube::Vertex) -> Colour {
        debug_assert_eq!(self.mode, Mode::Vertex);
        self.word[v as usize]
    }

    pub fn edge_colour(&self, u: cube::Vertex, d: usize) -> Colour {
        debug_assert!(self.mode.colours_edges());
        self.word[cube::edge_index(self.dim, u, d)]
    }

    pub fn count(&self, colour: Colour) -> usize {
        self.word.iter().filter(|&&c| c == colour).count()
    }

    pub fn word_string(&self) -> String {
        if self.word.is_empty() {
            "-".to_string()
        } else {
            self.word.iter().map(|c| c.as_char()).collect()
        }
    }

    /// Copy with Grey positions recoloured Red, as an edge-coloured cube.
    pub fn grey_to_red(&self) -> CubeColouring {
        match self.mode {
            Mode::Vertex | Mode::Edge => self.clone(),
            _ => CubeColouring {
                mode: Mode::Edge,
                dim: self.dim,
                word: self
                    .word
                    .iter()
                    .map(|&c| if c == Colour::Grey { Colour::Red } else { c })
                    .collect(),
            },
        }
    }

    /// Colouring induced on a labelled subcube, read in label order.
    pub fn induced(&self, emb: &cube::LabelledEmbedding) -> Vec<Colour> {
        let s = emb.dim();
        match self.mode {
            Mode::Vertex => (0..1u64 << s)
                .map(|i| self.word[emb.map(i) as usize])
                .collect(),
            _ => (0..cube::num_edges(s))
                .map(|idx| {
                    let (i, j) = cube::edge_at(s, idx);
                    let (u, d) = emb.map_edge(i, j);
                    self.word[cube::edge_index(self.dim, u, d)]
                })
                .collect(),
        }
    }
}

impl fmt::Display for CubeColouring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.mode, self.dim, self.word_string())
    }
}

impl FromStr for CubeColouring {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.split_whitespace();
        let (Some(mode), Some(dim)) = (parts.next(), parts.next()) else {
            return Err(Error::parse(format!("bad cube `{s}`")));
        };
        let mode: Mode = mode.parse()?;
        let dim: usize = dim
            .parse()
            .map_err(|_| Error::parse(format!("bad dimension in `{s}`")))?;
        if dim > 16 {
            return Err(Error::Capacity(format!("cube dimension {dim}")));
        }
        let word = match parts.next() {
            Some("-") | None => Vec::new(),
            Some(w) => w.chars().map(Colour::from_char).collect::<Result<_>>()?,
        };
        if parts.next().is_some() {
            return Err(Error::parse(format!("trailing tokens in `{s}`")));
        }
        CubeColouring::new(mode, dim, word)
    }
}

/// A forbidden family: uniform in mode (Vertex or Edge). May be empty.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct ForbiddenFamily {
    members: Vec<CubeColouring>,
}

impl ForbiddenFamily {
    pub fn new(members: Vec<CubeColouring>) -> Result<Self> {
        if let Some(first) = members.first() {
            let mode = first.mode();
            if mode != Mode::Vertex && mode != Mode::Edge {
                return Err(Error::ModeMismatch(format!(
                    "forbidden cubes must be vertex or edge coloured, got {mode}"
                )));
            }
            if members.iter().any(|m| m.mode() != mode) {
                return Err(Error::ModeMismatch("mixed-mode forbidden family".into()));
            }
        }
        Ok(ForbiddenFamily { members })
    }

    pub fn empty() -> Self {
        ForbiddenFamily::default()
    }

    pub fn members(&self) -> &[CubeColouring] {
        &self.members
    }

    pub fn mode(&self) -> Option<Mode> {
        self.members.first().map(|m| m.mode())
    }

    pub fn max_dim(&self) -> usize {
        self.members.iter().map(|m| m.dim()).max().unwrap_or(0)
    }

    /// Checks that the family can be tested against cubes of `mode`.
    pub fn check_compatible(&self, mode: Mode) -> Result<()> {
        match (self.mode(), mode) {
            (None, _) => Ok(()),
            (Some(Mode::Vertex), Mode::Vertex) => Ok(()),
            (Some(Mode::Edge), m) if m.colours_edges() => Ok(()),
            (Some(f), m) => Err(Error::ModeMismatch(format!(
                "{f} family cannot be tested against {m} cubes"
            ))),
        }
    }

    /// Parses one cube per line; blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let members = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty())
            .map(str::parse)
            .collect::<Result<Vec<_>>>()?;
        ForbiddenFamily::new(members)
    }

    pub fn to_text(&self) -> String {
        self.members.iter().map(|m| format!("{m}\n")).collect()
    }

    /// Short digest of the family's canonical member list.
    pub fn digest(&self) -> String {
        let mut canon: Vec<String> = self
            .members
            .iter()
            .map(|m| canonical_form(m).map(|c| c.to_string()).unwrap_or_else(|_| m.to_string()))
            .collect();
        canon.sort();
        canon.dedup();
        let hash = Sha256::digest(canon.join("\n").as_bytes());
        hex::encode(&hash[..8])
    }
}

/// Named forbidden cubes: `B`, `B1`, `B2` (edge-coloured) and `B3`, `B3-`,
/// `B4`, `B5` (vertex-coloured).
pub fn named_cube(name: &str) -> Result<CubeColouring> {
    Ok(match name {
        "B" => CubeColouring::uniform(Mode::Edge, 2, Colour::Blue),
        "B1" => CubeColouring::edge_with_blue(3, &[(0, 1), (1, 3), (3, 2), (2, 6), (6, 4), (4, 0)])?,
        "B2" => CubeColouring::edge_with_blue(3, &[(5, 1), (1, 3), (3, 2), (2, 6), (6, 4), (4, 5)])?,
        "B3" => CubeColouring::vertex_with_red(3, &[]),
        "B3-" => CubeColouring::vertex_with_red(3, &[7]),
        "B4" => CubeColouring::vertex_with_red(3, &[5, 7]),
        "B5" => CubeColouring::vertex_with_red(3, &[0, 7]),
        _ => return Err(Error::parse(format!("unknown named cube `{name}`"))),
    })
}

/// Named families: `B`, `B1B2`, `B3`, `B3-`, `B4B5`, or `empty`.
pub fn named_family(name: &str) -> Result<ForbiddenFamily> {
    let names: &[&str] = match name {
        "empty" => &[],
        "B" => &["B"],
        "B1B2" => &["B1", "B2"],
        "B3" => &["B3"],
        "B3-" => &["B3-"],
        "B4B5" => &["B4", "B5"],
        _ => return Err(Error::parse(format!("unknown named family `{name}`"))),
    };
    ForbiddenFamily::new(names.iter().map(|n| named_cube(n)).collect::<Result<_>>()?)
}

fn check_admissible(c: &CubeColouring, g: &SignedPermutation) -> Result<()> {
    if g.dim() != c.dim() {
        return Err(Error::Dimension(format!(
            "map on Q_{} applied to cube of dimension {}",
            g.dim(),
            c.dim()
        )));
    }
    if !g.fixes_dirs(c.mode().fixed_dirs().min(c.dim())) {
        return Err(Error::GreyPattern(c.mode().name()));
    }
    Ok(())
}

/// The cube `g(c)`: position `g(x)` of the result has the colour of `x` in `c`.
pub fn apply_map(c: &CubeColouring, g: &SignedPermutation) -> Result<CubeColouring> {
    check_admissible(c, g)?;
    Ok(apply_map_unchecked(c, g))
}

/// [`apply_map`] without the grey-pattern check. The result may violate
/// the mode's grey invariant, so it stays crate-private.
pub(crate) fn apply_map_unchecked(c: &CubeColouring, g: &SignedPermutation) -> CubeColouring {
    let perm = crate::canon::position_map(c.mode(), c.dim(), g);
    let mut word = vec![Colour::Blue; c.word.len()];
    for (p, &col) in c.word.iter().enumerate() {
        word[perm[p] as usize] = col;
    }
    CubeColouring {
        mode: c.mode,
        dim: c.dim,
        word,
    }
}

/// Lexicographically least word in the isomorphism class of `c`.
pub fn canonical_form(c: &CubeColouring) -> Result<CubeColouring> {
    let canon = Canonizer::cached(c.mode(), c.dim(), GroupKind::Mode)?;
    Ok(CubeColouring {
        mode: c.mode,
        dim: c.dim,
        word: canon.canon_word(&c.word),
    })
}

pub fn is_isomorphic(a: &CubeColouring, b: &CubeColouring) -> Result<bool> {
    Ok(a.mode() == b.mode() && a.dim() == b.dim() && canonical_form(a)? == canonical_form(b)?)
}

/// Blue element positions of `pattern`, as (vertex, label direction) pairs
/// (direction unused for vertex patterns).
pub(crate) fn blue_elements(pattern: &CubeColouring) -> Vec<(cube::Vertex, usize)> {
    let s = pattern.dim();
    pattern
        .word
        .iter()
        .enumerate()
        .filter(|(_, &c)| c == Colour::Blue)
        .map(|(p, _)| match pattern.mode() {
            Mode::Vertex => (p as cube::Vertex, 0),
            _ => cube::edge_at(s, p),
        })
        .collect()
}

/// Whether some labelled copy of `pattern`'s cube inside `host` lands every
/// Blue element of `pattern` on a Blue element of `host`.
pub fn contains_subcube(host: &CubeColouring, pattern: &CubeColouring) -> Result<bool> {
    Ok(find_subcube(host, pattern)?.is_some())
}

/// A witness embedding for [`contains_subcube`], if one exists.
pub fn find_subcube(
    host: &CubeColouring,
    pattern: &CubeColouring,
) -> Result<Option<cube::LabelledEmbedding>> {
    let vertex_host = host.mode() == Mode::Vertex;
    if (pattern.mode() == Mode::Vertex) != vertex_host
        || matches!(pattern.mode(), Mode::Partial | Mode::TriEdge)
    {
        return Err(Error::ModeMismatch(format!(
            "cannot look for a {} pattern in a {} cube",
            pattern.mode(),
            host.mode()
        )));
    }
    if pattern.dim() > host.dim() {
        return Ok(None);
    }
    let blues = blue_elements(pattern);
    if blues.len() > host.count(Colour::Blue) {
        return Ok(None);
    }
    let n = host.dim();
    for dirs in cube::direction_sequences(n, pattern.dim(), 0) {
        for base in 0..1u64 << n {
            let emb = cube::LabelledEmbedding {
                base,
                dirs: dirs.clone(),
            };
            let hit = blues.iter().all(|&(i, j)| {
                if vertex_host {
                    host.word[emb.map(i) as usize] == Colour::Blue
                } else {
                    let (u, d) = emb.map_edge(i, j);
                    host.word[cube::edge_index(n, u, d)] == Colour::Blue
                }
            });
            if hit {
                return Ok(Some(emb));
            }
        }
    }
    Ok(None)
}

/// F-freeness; grey edges count as Red.
pub fn is_f_free(c: &CubeColouring, fam: &ForbiddenFamily) -> Result<bool> {
    fam.check_compatible(c.mode())?;
    let host = c.grey_to_red();
    for m in fam.members() {
        if contains_subcube(&host, m)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Blue fraction of the vertices / edges / non-grey edges.
pub fn density(c: &CubeColouring) -> Result<Rational> {
    let blue = c.count(Colour::Blue);
    let total = match c.mode() {
        Mode::Vertex => c.word.len(),
        Mode::Edge if c.dim() == 0 => {
            return Err(Error::Dimension("edge density of Q_0".into()));
        }
        Mode::Partial if c.dim() < 2 => {
            return Err(Error::Dimension("partial density needs dimension >= 2".into()));
        }
        Mode::TriEdge if c.dim() < 3 => {
            return Err(Error::Dimension("tri-edge density needs dimension >= 3".into()));
        }
        m => c.word.len() - m.grey_positions(c.dim()),
    };
    Ok(Rational::new(BigInt::from(blue), BigInt::from(total)))
}

/// `k = 1`: grey the direction-0 edges (partial cube);
/// `k = 2`: grey directions 0 and 1 (tri-edge cube).
pub fn grey_project(c: &CubeColouring, k: usize) -> Result<CubeColouring> {
    if c.mode() != Mode::Edge {
        return Err(Error::ModeMismatch(format!(
            "grey projection needs an edge-coloured cube, got {}",
            c.mode()
        )));
    }
    let mode = match k {
        1 => Mode::Partial,
        2 => Mode::TriEdge,
        _ => return Err(Error::Dimension(format!("grey projection order {k}"))),
    };
    if c.dim() < k {
        return Err(Error::Dimension(format!(
            "cannot grey {k} directions of Q_{}",
            c.dim()
        )));
    }
    let grey = mode.grey_positions(c.dim());
    let word = c
        .word
        .iter()
        .enumerate()
        .map(|(p, &col)| if p < grey { Colour::Grey } else { col })
        .collect();
    Ok(CubeColouring {
        mode,
        dim: c.dim,
        word,
    })
}

#[cfg(test)]
mod tests {
    use std::collections::HashSet;

    use super::*;
    use crate::rational::ratio;

    fn cube(s: &str) -> CubeColouring {
        s.parse().unwrap()
    }

    fn all_words(mode: Mode, dim: usize) -> Vec<CubeColouring> {
        let len = mode.word_len(dim);
        let grey = mode.grey_positions(dim);
        let free = len - grey;
        (0..1u64 << free)
            .map(|bits| {
                let word = (0..len)
                    .map(|p| {
                        if p < grey {
                            Colour::Grey
                        } else if bits >> (p - grey) & 1 == 1 {
                            Colour::Red
                        } else {
                            Colour::Blue
                        }
                    })
                    .collect();
                CubeColouring::new(mode, dim, word).unwrap()
            })
            .collect()
    }

    #[test]
    fn text_form_round_trip() {
        for s in ["vertex 3 BBBBBBBR", "edge 2 BBBB", "partial 3 GGGGBBBBBBBB", "edge 0 -"] {
            assert_eq!(cube(s).to_string(), s);
        }
        assert!("partial 3 BBBBBBBBBBBB".parse::<CubeColouring>().is_err());
        assert!("edge 2 BBB".parse::<CubeColouring>().is_err());
        assert!("vertex 1 BX".parse::<CubeColouring>().is_err());
    }

    #[test]
    fn named_cubes_match_text_forms() {
        assert_eq!(named_cube("B3-").unwrap(), cube("vertex 3 BBBBBBBR"));
        assert_eq!(named_cube("B4").unwrap(), cube("vertex 3 BBBBBRBR"));
        assert_eq!(named_cube("B5").unwrap(), cube("vertex 3 RBBBBBBR"));
        assert_eq!(named_cube("B1").unwrap(), cube("edge 3 BBRRRBBRBRBR"));
        assert_eq!(named_cube("B2").unwrap(), cube("edge 3 RBBRRBBRRBBR"));
    }

    #[test]
    fn apply_map_examples() {
        let c = cube("vertex 1 BR");
        assert_eq!(apply_map(&c, &SignedPermutation::identity(1)).unwrap(), c);
        let flip = SignedPermutation::new(vec![0], 1).unwrap();
        assert_eq!(apply_map(&c, &flip).unwrap(), cube("vertex 1 RB"));

        // partial Q_2: direction-1 edges (0,2) and (1,3) coloured B, R
        let p = cube("partial 2 GGBR");
        let flip0 = SignedPermutation::new(vec![0, 1], 0b01).unwrap();
        assert_eq!(apply_map(&p, &flip0).unwrap(), cube("partial 2 GGRB"));
        let swap = SignedPermutation::new(vec![1, 0], 0).unwrap();
        assert!(matches!(apply_map(&p, &swap), Err(Error::GreyPattern(_))));
    }

    #[test]
    fn apply_map_partial_oracle() {
        // all 8 grey-preserving maps of Q_2: direction 0 fixed, any flips
        let p = cube("partial 2 GGBR");
        let mut images = HashSet::new();
        for flips in 0..4u64 {
            let g = SignedPermutation::new(vec![0, 1], flips).unwrap();
            let img = apply_map(&p, &g).unwrap();
            // edge (0,2) goes to (g0, g2) by hand
            let blue_lower = g.apply(0) & !2;
            let expect_blue_idx = crate::cube::edge_index(2, blue_lower, 1);
            assert_eq!(img.word()[expect_blue_idx], Colour::Blue);
            images.insert(img.word_string());
        }
        assert_eq!(images, HashSet::from(["GGBR".to_string(), "GGRB".to_string()]));
    }

    #[test]
    fn canonical_form_examples() {
        for mode in [Mode::Vertex, Mode::Edge, Mode::Partial, Mode::TriEdge] {
            for dim in 2..=3 {
                let c = CubeColouring::uniform(mode, dim, Colour::Blue);
                assert_eq!(canonical_form(&c).unwrap(), c);
            }
        }
        assert_eq!(
            canonical_form(&cube("vertex 1 BR")).unwrap(),
            canonical_form(&cube("vertex 1 RB")).unwrap()
        );
        let classes: HashSet<_> = all_words(Mode::Vertex, 2)
            .iter()
            .map(|c| canonical_form(c).unwrap())
            .collect();
        assert_eq!(classes.len(), 6);
    }

    #[test]
    fn canonical_form_is_orbit_minimum() {
        // brute force over the group, independently of the packed tables
        for mode in [Mode::Vertex, Mode::Edge, Mode::Partial] {
            let dim = 3;
            let group = cube::symmetry_group(dim, mode.fixed_dirs()).unwrap();
            for c in all_words(mode, dim).iter().step_by(13) {
                let min = group
                    .iter()
                    .map(|g| apply_map(c, g).unwrap().word().to_vec())
                    .min()
                    .unwrap();
                assert_eq!(canonical_form(c).unwrap().word(), &min[..]);
            }
        }
    }

    #[test]
    fn canonical_form_invariant_exhaustive() {
        for (mode, dim) in [(Mode::Vertex, 2), (Mode::Vertex, 3), (Mode::Edge, 2), (Mode::Edge, 3), (Mode::Partial, 3), (Mode::TriEdge, 3)] {
            let group = cube::symmetry_group(dim, mode.fixed_dirs()).unwrap();
            for c in all_words(mode, dim).iter().step_by(5) {
                let cf = canonical_form(c).unwrap();
                let d = density(c).ok();
                for g in &group {
                    let img = apply_map(c, g).unwrap();
                    assert_eq!(canonical_form(&img).unwrap(), cf);
                    assert_eq!(density(&img).ok(), d);
                }
            }
        }
    }

    #[test]
    fn containment_examples() {
        let b3 = named_cube("B3").unwrap();
        let b3m = named_cube("B3-").unwrap();
        let all_blue = CubeColouring::uniform(Mode::Vertex, 3, Colour::Blue);
        assert!(contains_subcube(&all_blue, &b3).unwrap());
        for v in 0..8 {
            let host = CubeColouring::vertex_with_red(3, &[v]);
            assert!(!contains_subcube(&host, &b3).unwrap());
            assert!(contains_subcube(&host, &b3m).unwrap());
        }
        assert!(contains_subcube(&all_blue, &named_cube("B").unwrap()).is_err());
    }

    #[test]
    fn one_red_vertex_oracle() {
        // every one of the 48 embeddings of Q_3 into itself sends vertex 7
        // somewhere; exactly those sending 7 to the red vertex match B3-
        let host = CubeColouring::vertex_with_red(3, &[2]);
        let hits = cube::enumerate_embeddings(3, 3, 0)
            .unwrap()
            .iter()
            .filter(|e| e.map(7) == 2)
            .count();
        assert_eq!(hits, 6);
        assert!(contains_subcube(&host, &named_cube("B3-").unwrap()).unwrap());
    }

    #[test]
    fn f_free_examples() {
        let b = named_family("B").unwrap();
        assert!(!is_f_free(&CubeColouring::uniform(Mode::Edge, 2, Colour::Blue), &b).unwrap());
        assert!(!is_f_free(&CubeColouring::uniform(Mode::Partial, 3, Colour::Blue), &b).unwrap());
        let b1 = named_cube("B1").unwrap();
        assert!(is_f_free(&b1, &b).unwrap());
        let fam_v = named_family("B3").unwrap();
        assert!(is_f_free(&b1, &fam_v).is_err());
    }

    #[test]
    fn partial_all_blue_contains_square_on_dirs_1_2() {
        // oracle: scan the six 2-subcubes directly
        let c = CubeColouring::uniform(Mode::Partial, 3, Colour::Blue).grey_to_red();
        let blue_squares = cube::enumerate_subcubes(3, 2)
            .unwrap()
            .iter()
            .filter(|sc| c.induced(&sc.embedding()).iter().all(|&x| x == Colour::Blue))
            .map(|sc| sc.dirs.clone())
            .collect::<Vec<_>>();
        assert_eq!(blue_squares, vec![vec![1, 2], vec![1, 2]]);
    }

    #[test]
    fn densities() {
        assert_eq!(density(&named_cube("B3-").unwrap()).unwrap(), ratio(7, 8));
        assert_eq!(density(&named_cube("B1").unwrap()).unwrap(), ratio(1, 2));
        assert_eq!(
            density(&CubeColouring::uniform(Mode::Partial, 3, Colour::Blue)).unwrap(),
            ratio(1, 1)
        );
        assert!(density(&CubeColouring::uniform(Mode::Partial, 1, Colour::Blue)).is_err());
        assert!(density(&cube("edge 0 -")).is_err());
    }

    #[test]
    fn grey_projections() {
        let p = grey_project(&CubeColouring::uniform(Mode::Edge, 2, Colour::Blue), 1).unwrap();
        assert_eq!(p.to_string(), "partial 2 GGBB");
        let t = grey_project(&named_cube("B").unwrap(), 2).unwrap();
        assert_eq!(t.to_string(), "triedge 2 GGGG");
        let t3 = grey_project(&CubeColouring::uniform(Mode::Edge, 3, Colour::Blue), 2).unwrap();
        assert_eq!((t3.count(Colour::Grey), t3.count(Colour::Blue)), (8, 4));
        assert!(grey_project(&p, 1).is_err());
    }

    #[test]
    fn f_free_is_isomorphism_invariant() {
        let fams = [named_family("B").unwrap(), named_family("B1B2").unwrap()];
        let group = cube::symmetry_group(3, 0).unwrap();
        for fam in &fams {
            for c in all_words(Mode::Edge, 3).iter().step_by(3) {
                let free = is_f_free(c, fam).unwrap();
                for g in group.iter().step_by(5) {
                    assert_eq!(is_f_free(&apply_map(c, g).unwrap(), fam).unwrap(), free);
                }
            }
        }
        let vf = named_family("B4B5").unwrap();
        let group4 = cube::symmetry_group(4, 0).unwrap();
        for c in all_words(Mode::Vertex, 4).iter().step_by(97) {
            let free = is_f_free(c, &vf).unwrap();
            for g in group4.iter().step_by(17) {
                assert_eq!(is_f_free(&apply_map(c, g).unwrap(), &vf).unwrap(), free);
            }
        }
    }

    #[test]
    fn family_parse_and_digest() {
        let fam = ForbiddenFamily::parse("# B1 and B2\nedge 3 BBRRRBBRBRBR\n\nedge 3 RBBRRBBRRBBR\n").unwrap();
        assert_eq!(fam.members().len(), 2);
        assert_eq!(fam.digest(), named_family("B1B2").unwrap().digest());
        assert_ne!(fam.digest(), named_family("B").unwrap().digest());
        assert!(ForbiddenFamily::parse("edge 2 BBBB\nvertex 3 BBBBBBBB").is_err());
        assert!(ForbiddenFamily::parse("partial 2 GGBB").is_err());
        assert_eq!(ForbiddenFamily::parse("# nothing\n").unwrap().members().len(), 0);
    }
}
