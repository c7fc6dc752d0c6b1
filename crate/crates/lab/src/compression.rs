//! Admissible compressions: gluing pairs of left vertices (rows) whose
//! supports are disjoint and land in the infinite type.
//!
//! A surjection `phi: [n] -> [m]` is `(G,K)`-admissible when every preimage
//! has one or two elements and each glued pair has disjoint row supports
//! contained in `T_{K,inf}(G)`. Gluing then changes no right in-degree and
//! no vertex type, which is what makes compressed matrices usable in place
//! of the originals. A map is `u`-light when no column sees more than `u`
//! glued rows.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{LabError, Result};
use crate::graph::BipartiteDigraph;
use crate::sampling::derive_trial_seed;
use crate::types_chains::{Chain, TypePartition};

/// A validated-shape row-gluing surjection.
#[derive(Clone, Debug, PartialEq)]
pub struct AdmissibleMap {
    n: usize,
    m: usize,
    table: Vec<usize>,
    /// Glued pairs `(i1, i2)` with `i1 < i2`, ascending by `i1`.
    glued_pairs: Vec<(usize, usize)>,
    /// Max number of glued left vertices seen by any right vertex, computed
    /// against the graph the map was built or validated on.
    lightness_u: usize,
    /// The admissibility parameter the map was validated against.
    k_param: f64,
}

impl AdmissibleMap {
    /// The identity map on `[n]`: no gluing, `m = n`.
    pub fn identity(n: usize) -> Self {
        AdmissibleMap {
            n,
            m: n,
            table: (0..n).collect(),
            glued_pairs: Vec::new(),
            lightness_u: 0,
            k_param: 0.0,
        }
    }

    /// Builds the surjection gluing exactly the given pairs. Image indices
    /// ascend with the minimum preimage, which fixes the compressed row
    /// order.
    pub fn from_pairs(n: usize, pairs: &[(usize, usize)], k_param: f64) -> Result<Self> {
        let mut partner = vec![usize::MAX; n];
        for &(a, b) in pairs {
            if a >= n || b >= n {
                return Err(LabError::IndexOutOfRange(format!("glued pair ({a}, {b})")));
            }
            if a == b {
                return Err(LabError::Config(format!("cannot glue {a} with itself")));
            }
            if partner[a] != usize::MAX || partner[b] != usize::MAX {
                return Err(LabError::Config(format!("vertex in pair ({a}, {b}) glued twice")));
            }
            partner[a] = b;
            partner[b] = a;
        }
        let mut table = vec![usize::MAX; n];
        let mut next = 0usize;
        for i in 0..n {
            if table[i] != usize::MAX {
                continue;
            }
            table[i] = next;
            if partner[i] != usize::MAX {
                table[partner[i]] = next;
            }
            next += 1;
        }
        let mut glued: Vec<(usize, usize)> =
            pairs.iter().map(|&(a, b)| (a.min(b), a.max(b))).collect();
        glued.sort_unstable();
        Ok(AdmissibleMap { n, m: next, table, glued_pairs: glued, lightness_u: 0, k_param })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn k_param(&self) -> f64 {
        self.k_param
    }

    pub fn image_of(&self, i: usize) -> usize {
        self.table[i]
    }

    pub fn table(&self) -> &[usize] {
        &self.table
    }

    pub fn glued_pairs(&self) -> &[(usize, usize)] {
        &self.glued_pairs
    }

    /// Sorted list of all left vertices glued to a partner.
    pub fn glued_vertices(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.glued_pairs.iter().flat_map(|&(a, b)| [a, b]).collect();
        v.sort_unstable();
        v
    }

    pub fn is_identity(&self) -> bool {
        self.glued_pairs.is_empty()
    }

    /// Lightness recorded by the last build/validation.
    pub fn lightness_u(&self) -> usize {
        self.lightness_u
    }

    fn preimages(&self) -> Vec<Vec<usize>> {
        let mut pre = vec![Vec::new(); self.m];
        for (i, &v) in self.table.iter().enumerate() {
            if v < self.m {
                pre[v].push(i);
            }
        }
        pre
    }
}

/// Max over right vertices of the number of glued left in-neighbors.
fn lightness_of(g: &BipartiteDigraph, glued: &[usize]) -> usize {
    (0..g.n_right())
        .map(|j| g.in_of_right(j).iter().filter(|i| glued.binary_search(i).is_ok()).count())
        .max()
        .unwrap_or(0)
}

/// Stage at which the three-step construction ran out of material.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BuildStage {
    /// Too few left vertices survived the degree/type/heaviness filter.
    Filtering,
    /// The greedy matching found fewer disjoint-support pairs than needed.
    Pairing,
    /// No thinning attempt reached the target pair count under the
    /// lightness cap.
    Thinning,
}

/// Construction outcome; starvation is an outcome, not an error.
#[derive(Clone, Debug)]
pub enum MapConstruction {
    Map(AdmissibleMap),
    Failure { stage: BuildStage, detail: String },
}

impl MapConstruction {
    pub fn ok(self) -> Option<AdmissibleMap> {
        match self {
            MapConstruction::Map(m) => Some(m),
            MapConstruction::Failure { .. } => None,
        }
    }
}

/// Three-step construction of a light admissible map gluing only vertices of
/// `j_set`.
///
/// Step 1 keeps the left vertices of `j_set` with row support of size at
/// most `2pn`, support inside the infinite type, and no edge into a heavy
/// column (in-degree at least `2pn`). Step 2 greedily pairs the survivors
/// into disjoint-support pairs in a seeded order. Step 3 samples
/// `floor(2 eps |J|)` of those pairs, drops every pair touching a column
/// that would exceed the `64 eps pn` lightness cap, and keeps
/// `floor(eps |J|)` of the survivors; the sampling is retried up to 16 times
/// before giving up.
pub fn build_admissible_map(
    g: &BipartiteDigraph,
    partition: &TypePartition,
    j_set: &[usize],
    epsilon: f64,
    pn: f64,
    seed: u64,
) -> Result<MapConstruction> {
    if !(epsilon > 0.0 && epsilon < 1.0 / 32.0) {
        return Err(LabError::Config(format!("epsilon={epsilon} out of (0, 1/32)")));
    }
    let n = g.n_left();
    for &i in j_set {
        if i >= n {
            return Err(LabError::IndexOutOfRange(format!("left vertex {i}")));
        }
    }

    let target = (epsilon * j_set.len() as f64).floor() as usize;
    if target == 0 {
        return Ok(MapConstruction::Map(AdmissibleMap {
            k_param: partition.k_param(),
            ..AdmissibleMap::identity(n)
        }));
    }

    // step 1: filter
    let heavy: Vec<usize> =
        (0..g.n_right()).filter(|&j| g.in_of_right(j).len() as f64 >= 2.0 * pn).collect();
    let in_heavy = g.in_neighbors_of_right_set(&heavy);
    let filtered: Vec<usize> = j_set
        .iter()
        .copied()
        .filter(|&i| {
            let support = g.out_of_left(i);
            support.len() as f64 <= 2.0 * pn
                && support.iter().all(|&j| partition.is_infinite(j))
                && in_heavy.binary_search(&i).is_err()
        })
        .collect();
    if filtered.len() < 2 {
        return Ok(MapConstruction::Failure {
            stage: BuildStage::Filtering,
            detail: format!("{} of {} candidates survived the filter", filtered.len(), j_set.len()),
        });
    }

    // step 2: greedy disjoint-support matching in a seeded order
    let mut order = filtered.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_trial_seed(seed, 0, "pairing"));
    order.shuffle(&mut rng);
    let mut used = vec![false; n];
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for (pos, &a) in order.iter().enumerate() {
        if used[a] {
            continue;
        }
        let sa = g.out_of_left(a);
        let partner = order[pos + 1..].iter().copied().find(|&b| {
            !used[b] && {
                let sb = g.out_of_left(b);
                sa.iter().all(|j| sb.binary_search(j).is_err())
            }
        });
        if let Some(b) = partner {
            used[a] = true;
            used[b] = true;
            pairs.push((a.min(b), a.max(b)));
        }
    }
    if pairs.len() < target {
        return Ok(MapConstruction::Failure {
            stage: BuildStage::Pairing,
            detail: format!("found {} disjoint pairs, need {target}", pairs.len()),
        });
    }

    // step 3: random thinning under the lightness cap
    let cap = 64.0 * epsilon * pn;
    let draw = ((2.0 * epsilon * j_set.len() as f64).floor() as usize).clamp(target, pairs.len());
    for attempt in 0..16 {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_trial_seed(seed, attempt, "thinning"));
        let mut pool = pairs.clone();
        pool.shuffle(&mut rng);
        pool.truncate(draw);

        let glued: Vec<usize> = {
            let mut v: Vec<usize> = pool.iter().flat_map(|&(a, b)| [a, b]).collect();
            v.sort_unstable();
            v
        };
        // columns that would break the lightness cap
        let violating: Vec<usize> = (0..g.n_right())
            .filter(|&j| {
                g.in_of_right(j).iter().filter(|i| glued.binary_search(i).is_ok()).count() as f64
                    > cap
            })
            .collect();
        if !violating.is_empty() {
            let bad_left = g.in_neighbors_of_right_set(&violating);
            pool.retain(|&(a, b)| {
                bad_left.binary_search(&a).is_err() && bad_left.binary_search(&b).is_err()
            });
        }
        if pool.len() >= target {
            pool.truncate(target);
            let mut map = AdmissibleMap::from_pairs(n, &pool, partition.k_param())?;
            map.lightness_u = lightness_of(g, &map.glued_vertices());
            return Ok(MapConstruction::Map(map));
        }
    }
    Ok(MapConstruction::Failure {
        stage: BuildStage::Thinning,
        detail: format!("no attempt kept {target} pairs under lightness cap {cap}"),
    })
}

/// Verdict of a from-scratch re-derivation of the admissibility invariants.
#[derive(Clone, Debug)]
pub struct MapValidation {
    pub admissible: bool,
    pub lightness_u: usize,
    pub violations: Vec<String>,
}

/// Re-checks surjectivity, preimage sizes, disjointness, type containment,
/// and lightness directly from the map table and the graph.
pub fn validate_map(
    phi: &AdmissibleMap,
    g: &BipartiteDigraph,
    partition: &TypePartition,
) -> MapValidation {
    let mut violations = Vec::new();
    if phi.n != g.n_left() {
        violations.push(format!("map domain {} vs {} left vertices", phi.n, g.n_left()));
    }
    let pre = phi.preimages();
    for (v, p) in pre.iter().enumerate() {
        match p.len() {
            0 => violations.push(format!("image {v} has empty preimage")),
            1 | 2 => {}
            k => violations.push(format!("image {v} has preimage of size {k}")),
        }
    }
    for p in pre.iter().filter(|p| p.len() == 2) {
        let (a, b) = (p[0], p[1]);
        let sa = g.out_of_left(a);
        let sb = g.out_of_left(b);
        if sa.iter().any(|j| sb.binary_search(j).is_ok()) {
            violations.push(format!("glued pair ({a}, {b}) has intersecting supports"));
        }
        for &j in sa.iter().chain(sb.iter()) {
            if !partition.is_infinite(j) {
                violations.push(format!("glued pair ({a}, {b}) touches finite-type column {j}"));
                break;
            }
        }
    }
    let glued: Vec<usize> = {
        let mut v: Vec<usize> =
            pre.iter().filter(|p| p.len() == 2).flat_map(|p| p.iter().copied()).collect();
        v.sort_unstable();
        v
    };
    let lightness_u = lightness_of(g, &glued);
    MapValidation { admissible: violations.is_empty(), lightness_u, violations }
}

/// Glues the left vertices of a graph by `phi`; in/out neighborhoods of the
/// merged vertices are unions.
pub fn compress_graph(g: &BipartiteDigraph, phi: &AdmissibleMap) -> Result<BipartiteDigraph> {
    if phi.n != g.n_left() {
        return Err(LabError::Dimension(format!(
            "map domain {} vs {} left vertices",
            phi.n,
            g.n_left()
        )));
    }
    let mut arrows = Vec::new();
    let mut back = Vec::new();
    for j in 0..g.n_right() {
        for &i in g.in_of_right(j) {
            arrows.push((phi.image_of(i), j));
        }
        for &i in g.out_of_right(j) {
            back.push((phi.image_of(i), j));
        }
    }
    BipartiteDigraph::from_edges(phi.m, g.n_right(), &arrows, &back)
}

/// A compressed matrix with its associated graph.
#[derive(Clone, Debug)]
pub struct Compressed {
    pub matrix: DMatrix<Complex64>,
    pub graph: BipartiteDigraph,
}

/// Sums the rows glued by `phi`. Errors when the map fails validation
/// against the matrix graph: gluing intersecting supports would cancel
/// entries and break every downstream identity.
pub fn apply_compression(
    values: &DMatrix<Complex64>,
    alpha: f64,
    phi: &AdmissibleMap,
) -> Result<Compressed> {
    if values.nrows() != phi.n {
        return Err(LabError::Dimension(format!(
            "map domain {} vs matrix with {} rows",
            phi.n,
            values.nrows()
        )));
    }
    let g = BipartiteDigraph::from_matrix(values, alpha)?;
    let partition = crate::types_chains::classify_types(&g, phi.k_param());
    let validation = validate_map(phi, &g, &partition);
    if !validation.admissible {
        return Err(LabError::MismatchedInputs(format!(
            "map is not admissible for this matrix: {}",
            validation.violations.join("; ")
        )));
    }

    let n_cols = values.ncols();
    let mut matrix = DMatrix::zeros(phi.m, n_cols);
    for i in 0..phi.n {
        let target = phi.image_of(i);
        for j in 0..n_cols {
            matrix[(target, j)] += values[(i, j)];
        }
    }
    let graph = BipartiteDigraph::from_matrix(&matrix, alpha)?;
    Ok(Compressed { matrix, graph })
}

/// Depth-first enumeration of phi-chains of length exactly `k` on the
/// compressed graph: a step from `j` goes to any `h != j` with an edge
/// `phi(j) -> h`.
pub fn enumerate_phi_chains(
    gphi: &BipartiteDigraph,
    phi: &AdmissibleMap,
    k: usize,
    cap: usize,
) -> Result<(Vec<Chain>, bool)> {
    if k == 0 {
        return Err(LabError::Config("chain length must be at least 1".to_string()));
    }
    if gphi.n_left() != phi.m {
        return Err(LabError::Dimension(format!(
            "compressed graph has {} left vertices, map codomain is {}",
            gphi.n_left(),
            phi.m
        )));
    }
    // the zig-zag reading needs the half-step j -> phi(j), i.e. the image of
    // every horizontal edge
    for j in 0..gphi.n_right() {
        if j < phi.n && gphi.out_of_right(j).binary_search(&phi.image_of(j)).is_err() {
            return Err(LabError::Config(format!(
                "phi-chains need the horizontal back edge phi({j}) <- {j}"
            )));
        }
    }

    let mut out = Vec::new();
    let mut truncated = false;
    let mut stack: Vec<usize> = Vec::with_capacity(k);

    fn dfs(
        gphi: &BipartiteDigraph,
        phi: &AdmissibleMap,
        k: usize,
        cap: usize,
        stack: &mut Vec<usize>,
        out: &mut Vec<Chain>,
        truncated: &mut bool,
    ) {
        if *truncated {
            return;
        }
        if stack.len() == k {
            if out.len() >= cap {
                *truncated = true;
                return;
            }
            out.push(Chain::new(stack.clone()).expect("dfs produces valid sequences"));
            return;
        }
        let last = *stack.last().expect("non-empty");
        for &h in gphi.out_of_left(phi.image_of(last)) {
            if h == last {
                continue;
            }
            stack.push(h);
            dfs(gphi, phi, k, cap, stack, out, truncated);
            stack.pop();
            if *truncated {
                return;
            }
        }
    }

    for s in 0..gphi.n_right() {
        if truncated {
            break;
        }
        stack.push(s);
        dfs(gphi, phi, k, cap, &mut stack, &mut out, &mut truncated);
        stack.pop();
    }
    Ok((out, truncated))
}

/// `|W_{k,S}|`: right vertices that start a phi-chain of length at most `k`
/// ending in `S`. Exact backward breadth-first search, `k - 1` steps.
pub fn chain_source_count(
    gphi: &BipartiteDigraph,
    phi: &AdmissibleMap,
    s_set: &[usize],
    k: usize,
) -> Result<usize> {
    if k == 0 {
        return Err(LabError::Config("chain length must be at least 1".to_string()));
    }
    let nr = gphi.n_right();
    let mut current = vec![false; nr];
    for &j in s_set {
        if j >= nr {
            return Err(LabError::IndexOutOfRange(format!("source vertex {j}")));
        }
        current[j] = true;
    }
    for _ in 1..k {
        let mut next = current.clone();
        for j in 0..nr {
            if next[j] {
                continue;
            }
            let reaches = gphi.out_of_left(phi.image_of(j)).iter().any(|&h| h != j && current[h]);
            if reaches {
                next[j] = true;
            }
        }
        current = next;
    }
    Ok(current.iter().filter(|&&b| b).count())
}

/// Writes the map dump: `n m` header, then `i phi(i)` per line.
pub fn write_map_file<W: std::io::Write>(phi: &AdmissibleMap, w: &mut W, path: &str) -> Result<()> {
    let io = |e| LabError::io(path, e);
    writeln!(w, "{} {}", phi.n, phi.m).map_err(io)?;
    for (i, &v) in phi.table.iter().enumerate() {
        writeln!(w, "{i} {v}").map_err(io)?;
    }
    Ok(())
}
