use crate::error::{Error, Result};
use crate::rng::Pcg32;
use crate::sampler::SamplerState;

/// Produces synthetic samples with requested attribute values.
pub trait AugmentationSource {
    type Handle;

    fn request(&self, label: u32, nuisance: u32, rng: &mut Pcg32) -> Result<Self::Handle>;
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Slot<H> {
    /// Index into the base sampler's entries.
    Real(usize),
    Augmented(H),
}

impl<H> Slot<H> {
    pub fn is_augmented(&self) -> bool {
        matches!(self, Slot::Augmented(_))
    }
}

/// `(1 - alpha) * base + alpha * source`, decided independently per slot.
pub struct MixtureSampler<A> {
    base: SamplerState,
    source: Option<A>,
    alpha: f64,
    grid: (u32, u32),
    rng: Pcg32,
}

impl<A: AugmentationSource> MixtureSampler<A> {
    /// `grid` is `(num_labels, num_nuisance)`; augmented targets are uniform over it.
    pub fn new(base: SamplerState, source: Option<A>, alpha: f64, grid: (u32, u32), seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::Config(format!("mixture alpha {alpha} outside [0, 1]")));
        }
        if alpha > 0.0 && source.is_none() {
            return Err(Error::AugSource("alpha > 0 but no augmentation source".into()));
        }
        if grid.0 == 0 || grid.1 == 0 {
            return Err(Error::Config("empty attribute grid".into()));
        }
        Ok(MixtureSampler {
            base,
            source,
            alpha,
            grid,
            rng: Pcg32::seed_from_u64(seed),
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn base_mut(&mut self) -> &mut SamplerState {
        &mut self.base
    }

    pub fn draw_one(&mut self) -> Result<Slot<A::Handle>> {
        if self.alpha > 0.0 && self.rng.bernoulli(self.alpha) {
            let l = self.rng.below(self.grid.0 as u64) as u32;
            let a = self.rng.below(self.grid.1 as u64) as u32;
            let source = self.source.as_ref().expect("checked at construction");
            Ok(Slot::Augmented(source.request(l, a, &mut self.rng)?))
        } else {
            Ok(Slot::Real(self.base.draw_one()))
        }
    }

    pub fn draw(&mut self, m: usize) -> Result<Vec<Slot<A::Handle>>> {
        (0..m).map(|_| self.draw_one()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Echo;

    impl AugmentationSource for Echo {
        type Handle = (u32, u32);

        fn request(&self, label: u32, nuisance: u32, _rng: &mut Pcg32) -> Result<(u32, u32)> {
            Ok((label, nuisance))
        }
    }

    struct Broken;

    impl AugmentationSource for Broken {
        type Handle = ();

        fn request(&self, _: u32, _: u32, _: &mut Pcg32) -> Result<()> {
            Err(Error::AugSource("no latents".into()))
        }
    }

    fn base() -> SamplerState {
        SamplerState::new(&[1.0, 2.0, 3.0, 4.0], 5).unwrap()
    }

    #[test]
    fn alpha_zero_matches_base() {
        let mut mix = MixtureSampler::new(base(), None::<Echo>, 0.0, (3, 3), 1).unwrap();
        let got: Vec<usize> = mix
            .draw(500)
            .unwrap()
            .into_iter()
            .map(|s| match s {
                Slot::Real(i) => i,
                Slot::Augmented(_) => panic!("augmented slot at alpha 0"),
            })
            .collect();
        assert_eq!(got, base().draw(500));
    }

    #[test]
    fn alpha_one_is_all_augmented_and_uniform() {
        let mut mix = MixtureSampler::new(base(), Some(Echo), 1.0, (3, 3), 1).unwrap();
        let slots = mix.draw(9000).unwrap();
        let mut counts = [[0usize; 3]; 3];
        for s in slots {
            match s {
                Slot::Augmented((l, a)) => counts[l as usize][a as usize] += 1,
                Slot::Real(_) => panic!("real slot at alpha 1"),
            }
        }
        assert!(counts.iter().flatten().all(|&c| (800..1200).contains(&c)));
    }

    #[test]
    fn half_alpha_fraction() {
        let mut mix = MixtureSampler::new(base(), Some(Echo), 0.5, (2, 2), 8).unwrap();
        let m = 10_000;
        let aug = mix.draw(m).unwrap().iter().filter(|s| s.is_augmented()).count() as f64;
        assert!((aug / m as f64 - 0.5).abs() < 0.02);
    }

    #[test]
    fn source_errors_propagate() {
        assert!(matches!(
            MixtureSampler::new(base(), None::<Echo>, 0.3, (2, 2), 1),
            Err(Error::AugSource(_))
        ));
        let mut mix = MixtureSampler::new(base(), Some(Broken), 1.0, (2, 2), 1).unwrap();
        assert!(matches!(mix.draw(3), Err(Error::AugSource(_))));
    }
}
