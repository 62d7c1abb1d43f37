use alloc::vec::Vec;

use super::construction::LevelState;
use crate::blocking::BlockTree;

/// Per-node quantities of one split `(k, j) → (k+1, 2j−1), (k+1, 2j)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeDiagnostic {
    pub m: u32,
    pub k: u32,
    pub j: usize,
    /// `S̃ = T̃ − V`.
    pub s_tilde: f64,
    /// `T* = Ỹ_L − Ỹ_R`.
    pub t_star: f64,
    /// `V* = W_L − W_R`.
    pub v_star: f64,
    pub t_tilde: f64,
    pub v: f64,
    pub y_left: f64,
    pub y_right: f64,
    pub b_left: f64,
    pub b_right: f64,
}

/// The root discrepancy `S̃₀ = Ỹ_{0,1} − W_{0,1}` and every node of one level.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelDiagnostics {
    pub m: u32,
    pub s0: f64,
    pub y01: f64,
    pub w01: f64,
    pub b01: f64,
    pub nodes: Vec<NodeDiagnostic>,
}

pub fn level_diagnostics(state: &LevelState) -> LevelDiagnostics {
    let mut nodes = Vec::new();
    for k in 0..state.m as usize {
        for j in 0..state.t_tilde[k].len() {
            let (l, r) = (2 * j, 2 * j + 1);
            let y_left = state.y_nodes[k + 1][l];
            let y_right = state.y_nodes[k + 1][r];
            nodes.push(NodeDiagnostic {
                m: state.m,
                k: k as u32,
                j: j + 1,
                s_tilde: state.t_tilde[k][j] - state.v[k][j],
                t_star: y_left - y_right,
                v_star: state.w_nodes[k + 1][l] - state.w_nodes[k + 1][r],
                t_tilde: state.t_tilde[k][j],
                v: state.v[k][j],
                y_left,
                y_right,
                b_left: state.b_nodes[k + 1][l],
                b_right: state.b_nodes[k + 1][r],
            });
        }
    }
    let y01 = state.y_nodes[0][0];
    let w01 = state.w_nodes[0][0];
    LevelDiagnostics { m: state.m, s0: y01 - w01, y01, w01, b01: state.b_nodes[0][0], nodes }
}

/// `Σ_m Σ_{j ∈ J_m} f(t_j^m)(Ỹ_j^m − W_j^m)` over the retained states.
pub fn telescoping_sum(tree: &BlockTree, states: &[LevelState], f: impl Fn(f64) -> f64) -> f64 {
    let n = tree.n();
    states
        .iter()
        .map(|state| {
            let level = tree.level(state.m);
            state.y.iter().zip(&state.w).enumerate().map(|(i, (y, w))| f(level.design_point(i + 1, n)) * (y - w)).sum::<f64>()
        })
        .sum()
}

/// `Σ_i f(i/n)(X̃_i − N_i)`.
pub fn direct_sum(x: &[f64], gauss: &[f64], f: impl Fn(f64) -> f64) -> f64 {
    let n = x.len() as f64;
    x.iter().zip(gauss).enumerate().map(|(i, (a, b))| f((i + 1) as f64 / n) * (a - b)).sum()
}
