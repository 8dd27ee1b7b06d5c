//! Agents, groups, the network plant, and the separated cost data.

use crate::error::{Error, Result};
use crate::hierarchy;
use crate::mats::{self, Mat};

/// Singular-value threshold (relative to the largest) for Kalman rank tests.
pub const RANK_REL_TOL: f64 = 1e-8;

/// `ẋ = G x + H u` for a single agent.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentDynamics {
    pub g: Mat,
    pub h: Mat,
}

impl AgentDynamics {
    pub fn new(g: Mat, h: Mat) -> Result<Self> {
        if !g.is_square() {
            return Err(Error::dims("agent G", "square", format!("{}x{}", g.nrows(), g.ncols())));
        }
        if h.nrows() != g.nrows() {
            return Err(Error::dims("agent H rows", g.nrows(), h.nrows()));
        }
        Ok(AgentDynamics { g, h })
    }

    pub fn state_dim(&self) -> usize {
        self.g.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.h.ncols()
    }
}

/// Agents of one group with their block-diagonal concatenation.
#[derive(Debug, Clone)]
pub struct GroupModel {
    pub agents: Vec<AgentDynamics>,
    pub a: Mat,
    pub b: Mat,
}

impl GroupModel {
    pub fn new(agents: Vec<AgentDynamics>) -> Result<Self> {
        let first = agents.first().ok_or(Error::Empty("group agents"))?;
        let (n, m) = (first.state_dim(), first.input_dim());
        for agent in &agents {
            if agent.state_dim() != n || agent.input_dim() != m {
                return Err(Error::dims(
                    "agent dims within group",
                    format!("n={n}, m={m}"),
                    format!("n={}, m={}", agent.state_dim(), agent.input_dim()),
                ));
            }
        }
        let a = mats::block_diag(&agents.iter().map(|x| x.g.clone()).collect::<Vec<_>>())?;
        let b = mats::block_diag(&agents.iter().map(|x| x.h.clone()).collect::<Vec<_>>())?;
        Ok(GroupModel { agents, a, b })
    }

    pub fn size(&self) -> usize {
        self.agents.len()
    }

    pub fn agent_state_dim(&self) -> usize {
        self.agents[0].state_dim()
    }

    pub fn agent_input_dim(&self) -> usize {
        self.agents[0].input_dim()
    }
}

#[derive(Debug, Clone)]
pub struct NetworkModel {
    pub groups: Vec<GroupModel>,
    pub a_net: Mat,
    pub b_net: Mat,
}

impl NetworkModel {
    pub fn new(groups: Vec<GroupModel>) -> Result<Self> {
        if groups.is_empty() {
            return Err(Error::Empty("network groups"));
        }
        let a_net = mats::block_diag(&groups.iter().map(|g| g.a.clone()).collect::<Vec<_>>())?;
        let b_net = mats::block_diag(&groups.iter().map(|g| g.b.clone()).collect::<Vec<_>>())?;
        Ok(NetworkModel {
            groups,
            a_net,
            b_net,
        })
    }

    pub fn num_agents(&self) -> usize {
        self.groups.iter().map(|g| g.size()).sum()
    }

    pub fn group_sizes(&self) -> Vec<usize> {
        self.groups.iter().map(|g| g.size()).collect()
    }

    pub fn group_state_dims(&self) -> Vec<usize> {
        self.groups.iter().map(|g| g.a.nrows()).collect()
    }

    pub fn group_input_dims(&self) -> Vec<usize> {
        self.groups.iter().map(|g| g.b.ncols()).collect()
    }

    /// Common agent state dimension, if every agent shares one.
    pub fn uniform_agent_state_dim(&self) -> Option<usize> {
        let n = self.groups[0].agent_state_dim();
        self.groups
            .iter()
            .all(|g| g.agent_state_dim() == n)
            .then_some(n)
    }
}

/// Undirected inter-group graph with an n×n PSD weight per edge.
#[derive(Debug, Clone)]
pub struct GroupTopology {
    pub group_sizes: Vec<usize>,
    pub edges: Vec<(usize, usize)>,
    pub edge_weights: Vec<Mat>,
}

impl GroupTopology {
    pub fn new(group_sizes: Vec<usize>, edges: Vec<(usize, usize)>, edge_weights: Vec<Mat>) -> Result<Self> {
        let topo = GroupTopology {
            group_sizes,
            edges,
            edge_weights,
        };
        topo.check()?;
        Ok(topo)
    }

    pub fn num_groups(&self) -> usize {
        self.group_sizes.len()
    }

    pub fn check(&self) -> Result<()> {
        if self.group_sizes.is_empty() || self.group_sizes.contains(&0) {
            return Err(Error::InvalidParameter("group sizes must be positive".into()));
        }
        if self.edge_weights.len() != self.edges.len() {
            return Err(Error::dims("edge weights", self.edges.len(), self.edge_weights.len()));
        }
        let n_groups = self.num_groups();
        let mut seen = std::collections::BTreeSet::new();
        for &(a, b) in &self.edges {
            if a == b || a >= n_groups || b >= n_groups {
                return Err(Error::InvalidEdge {
                    from: a,
                    to: b,
                    nodes: n_groups,
                });
            }
            if !seen.insert((a.min(b), a.max(b))) {
                return Err(Error::InvalidParameter(format!("duplicate edge ({a}, {b})")));
            }
        }
        for (e, w) in self.edge_weights.iter().enumerate() {
            if !mats::is_psd(w, 1e-10)? {
                return Err(Error::InvalidParameter(format!(
                    "edge weight {e} is not symmetric positive semidefinite"
                )));
            }
        }
        Ok(())
    }

    pub fn incidence(&self) -> Result<Mat> {
        mats::incidence_from_edges(self.num_groups(), &self.edges)
    }

    /// Unweighted N×N Laplacian `D Dᵀ`.
    pub fn laplacian(&self) -> Result<Mat> {
        let d = self.incidence()?;
        Ok(&d * d.transpose())
    }

    pub fn neighbors(&self, j: usize) -> Vec<usize> {
        self.edges
            .iter()
            .filter_map(|&(a, b)| {
                if a == j {
                    Some(b)
                } else if b == j {
                    Some(a)
                } else {
                    None
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct CostSpec {
    pub q_bar_blocks: Vec<Mat>,
    pub r_blocks: Vec<Mat>,
    pub topology: GroupTopology,
}

impl CostSpec {
    pub fn r_net(&self) -> Result<Mat> {
        mats::block_diag(&self.r_blocks)
    }

    pub fn q_bar_net(&self) -> Result<Mat> {
        mats::block_diag(&self.q_bar_blocks)
    }

    pub fn check_against(&self, model: &NetworkModel) -> Result<()> {
        let n_groups = model.groups.len();
        if self.q_bar_blocks.len() != n_groups || self.r_blocks.len() != n_groups {
            return Err(Error::dims(
                "cost blocks per group",
                n_groups,
                format!("{} Q̄, {} R", self.q_bar_blocks.len(), self.r_blocks.len()),
            ));
        }
        if self.topology.group_sizes != model.group_sizes() {
            return Err(Error::dims(
                "topology group sizes",
                format!("{:?}", model.group_sizes()),
                format!("{:?}", self.topology.group_sizes),
            ));
        }
        for (j, g) in model.groups.iter().enumerate() {
            let (nj, mj) = (g.a.nrows(), g.b.ncols());
            if self.q_bar_blocks[j].shape() != (nj, nj) {
                return Err(Error::dims("Q̄_j", format!("{nj}x{nj}"), format!("{:?}", self.q_bar_blocks[j].shape()))
                    .in_group(j));
            }
            if self.r_blocks[j].shape() != (mj, mj) {
                return Err(Error::dims("R_j", format!("{mj}x{mj}"), format!("{:?}", self.r_blocks[j].shape()))
                    .in_group(j));
            }
        }
        Ok(())
    }
}

/// Rank of the Kalman controllability matrix `[B, AB, …, Aⁿ⁻¹B]`.
pub fn controllability_rank(a: &Mat, b: &Mat) -> usize {
    let n = a.nrows();
    let m = b.ncols();
    let mut kalman = Mat::zeros(n, n * m);
    let mut block = b.clone();
    for i in 0..n {
        kalman.view_mut((0, i * m), (n, m)).copy_from(&block);
        block = a * block;
    }
    mats::numerical_rank(&kalman, RANK_REL_TOL)
}

pub fn observability_rank(c: &Mat, a: &Mat) -> usize {
    controllability_rank(&a.transpose(), &c.transpose())
}

#[derive(Debug, Clone)]
pub struct GroupCheck {
    pub controllability_rank: usize,
    pub state_dim: usize,
    pub controllable: bool,
    pub q_bar_psd: bool,
    pub r_pd: bool,
}

#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub groups: Vec<GroupCheck>,
    pub observability_rank: usize,
    pub observable: bool,
    /// Violated assumptions; not fatal since learning from data may still succeed.
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn all_controllable(&self) -> bool {
        self.groups.iter().all(|g| g.controllable)
    }
}

/// Checks controllability of every group, observability of `(Q^{1/2}, 𝒜)`,
/// and cost definiteness. Only dimension errors are fatal.
pub fn validate(model: &NetworkModel, cost: &CostSpec) -> Result<ValidationReport> {
    cost.check_against(model)?;
    let mut warnings = Vec::new();
    let mut groups = Vec::new();
    for (j, g) in model.groups.iter().enumerate() {
        let state_dim = g.a.nrows();
        let rank = controllability_rank(&g.a, &g.b);
        let q_bar_psd = mats::is_psd(&cost.q_bar_blocks[j], 1e-10)?;
        let r_pd = mats::is_spd(&cost.r_blocks[j], 1e-12)?;
        if rank < state_dim {
            warnings.push(format!("group {j}: (A_j, B_j) not controllable (rank {rank} < {state_dim})"));
        }
        if !q_bar_psd {
            warnings.push(format!("group {j}: Q̄_j is not positive semidefinite"));
        }
        if !r_pd {
            warnings.push(format!("group {j}: R_j is not positive definite"));
        }
        groups.push(GroupCheck {
            controllability_rank: rank,
            state_dim,
            controllable: rank == state_dim,
            q_bar_psd,
            r_pd,
        });
    }

    let q_total = match model.uniform_agent_state_dim() {
        Some(n) => hierarchy::build_separated_cost(cost, n)?.q_total,
        None if cost.topology.edges.is_empty() => cost.q_bar_net()?,
        None => {
            return Err(Error::InvalidParameter(
                "centroid coupling requires a common agent state dimension".into(),
            ))
        }
    };
    let obs_rank = observability_rank(&mats::sym_sqrt(&q_total), &model.a_net);
    let n_total = model.a_net.nrows();
    if obs_rank < n_total {
        warnings.push(format!("(Q^1/2, A) not observable (rank {obs_rank} < {n_total})"));
    }
    Ok(ValidationReport {
        groups,
        observability_rank: obs_rank,
        observable: obs_rank == n_total,
        warnings,
    })
}
