//! Ready-made single-particle systems: a Hamiltonian on a grid, the position
//! observable and the ground state.

use crate::error::Result;
use crate::grid::SpatialGrid;
use crate::hamiltonian::{
    build_position_observable, double_well_hamiltonian, harmonic_hamiltonian, DoubleWell,
    KineticScheme,
};
use crate::observable::{diagonalize, HermitianObservable};
use crate::propagator::Propagator;
use crate::state::QuantumState;

#[derive(Clone, Debug)]
pub struct OscillatorSystem {
    grid: SpatialGrid,
    omega0: f64,
    hamiltonian: HermitianObservable,
    position: HermitianObservable,
    ground: QuantumState,
}

impl OscillatorSystem {
    pub fn double_well(
        grid: SpatialGrid,
        params: &DoubleWell,
        kinetic: KineticScheme,
    ) -> Result<Self> {
        let h = diagonalize(&double_well_hamiltonian(&grid, params, kinetic)?)?;
        Self::from_hamiltonian(grid, params.omega0, h)
    }

    pub fn harmonic(grid: SpatialGrid, omega0: f64, kinetic: KineticScheme) -> Result<Self> {
        let h = diagonalize(&harmonic_hamiltonian(&grid, omega0, kinetic)?)?;
        Self::from_hamiltonian(grid, omega0, h)
    }

    fn from_hamiltonian(
        grid: SpatialGrid,
        omega0: f64,
        hamiltonian: HermitianObservable,
    ) -> Result<Self> {
        let position = diagonalize(&build_position_observable(&grid))?;
        let ground = hamiltonian.eigenstate(0, 0.0)?;
        Ok(OscillatorSystem {
            grid,
            omega0,
            hamiltonian,
            position,
            ground,
        })
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn omega0(&self) -> f64 {
        self.omega0
    }

    pub fn hamiltonian(&self) -> &HermitianObservable {
        &self.hamiltonian
    }

    pub fn position(&self) -> &HermitianObservable {
        &self.position
    }

    pub fn ground_state(&self) -> &QuantumState {
        &self.ground
    }

    /// Energy eigenstate `n` at t = 0.
    pub fn level(&self, n: usize) -> Result<QuantumState> {
        self.hamiltonian.eigenstate(n, 0.0)
    }

    pub fn propagator(&self, tau: f64) -> Result<Propagator> {
        Propagator::new(&self.hamiltonian, tau)
    }
}
