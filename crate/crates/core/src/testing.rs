//! Random hosts for property tests and identity checks.

use rand::Rng;

use crate::colour::{self, Colour, CubeColouring, ForbiddenFamily, Mode};
use crate::cube;
use crate::error::{Error, Result};

/// A uniformly coloured random cube (Blue with probability `blue`).
pub fn random_cube<R: Rng>(rng: &mut R, mode: Mode, dim: usize, blue: f64) -> CubeColouring {
    let mut c = CubeColouring::uniform(mode, dim, Colour::Red);
    let grey = mode.grey_positions(dim);
    for p in grey..mode.word_len(dim) {
        if rng.gen_bool(blue) {
            c.set_position(p, Colour::Blue);
        }
    }
    c
}

/// A random `F`-free vertex- or edge-coloured cube: a random colouring
/// repaired by turning one Blue element of each forbidden copy Red.
pub fn random_free_host<R: Rng>(
    rng: &mut R,
    mode: Mode,
    dim: usize,
    fam: &ForbiddenFamily,
    blue: f64,
) -> Result<CubeColouring> {
    if !matches!(mode, Mode::Vertex | Mode::Edge) {
        return Err(Error::ModeMismatch(format!("random hosts are vertex or edge cubes, not {mode}")));
    }
    fam.check_compatible(mode)?;
    let mut host = random_cube(rng, mode, dim, blue);
    'repair: loop {
        for member in fam.members() {
            if let Some(emb) = colour::find_subcube(&host, member)? {
                let blues = colour::blue_elements(member);
                let (i, j) = blues[rng.gen_range(0..blues.len())];
                let p = match mode {
                    Mode::Vertex => emb.map(i) as usize,
                    _ => {
                        let (u, d) = emb.map_edge(i, j);
                        cube::edge_index(dim, u, d)
                    }
                };
                host.set_position(p, Colour::Red);
                continue 'repair;
            }
        }
        return Ok(host);
    }
}
