use std::collections::HashSet;
use std::f64::consts::PI;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Normal, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linkbudget::BistaticLink;
use crate::propagation::{db_to_linear, free_space_distance, Frequency};
use crate::stats::{mean, quantile_sorted, trial_rng};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// One row of a deployment file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeployedZed {
    pub zed_id: String,
    pub x_m: f64,
    pub y_m: f64,
    pub profile_name: String,
}

impl DeployedZed {
    pub fn position(&self) -> Point {
        Point::new(self.x_m, self.y_m)
    }
}

/// Rectangle `[0, width] x [0, height]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Arena {
    pub width_m: f64,
    pub height_m: f64,
}

impl Arena {
    pub fn validate(&self) -> Result<()> {
        if !(self.width_m > 0.0 && self.height_m > 0.0)
            || !self.width_m.is_finite()
            || !self.height_m.is_finite()
        {
            return Err(Error::config(format!(
                "arena must have positive finite area, got {} x {} m",
                self.width_m, self.height_m
            )));
        }
        Ok(())
    }

    pub fn area(&self) -> f64 {
        self.width_m * self.height_m
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ZedDeployment {
    pub zeds: Vec<DeployedZed>,
}

impl ZedDeployment {
    pub fn new(zeds: Vec<DeployedZed>) -> Result<Self> {
        let d = ZedDeployment { zeds };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        let mut ids = HashSet::new();
        for z in &self.zeds {
            if !ids.insert(z.zed_id.as_str()) {
                return Err(Error::config(format!("duplicate ZED id {:?}", z.zed_id)));
            }
            if !z.x_m.is_finite() || !z.y_m.is_finite() {
                return Err(Error::config(format!("ZED {:?} has a non-finite position", z.zed_id)));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.zeds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.zeds.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&DeployedZed> {
        self.zeds.iter().find(|z| z.zed_id == id)
    }

    /// Tags on a square lattice covering the arena, corners included.
    pub fn grid(arena: &Arena, spacing_m: f64, profile_name: &str) -> Result<Self> {
        arena.validate()?;
        if !(spacing_m > 0.0) {
            return Err(Error::config("grid spacing must be positive"));
        }
        let nx = (arena.width_m / spacing_m + 1e-9).floor() as usize;
        let ny = (arena.height_m / spacing_m + 1e-9).floor() as usize;
        let mut zeds = Vec::with_capacity((nx + 1) * (ny + 1));
        for j in 0..=ny {
            for i in 0..=nx {
                zeds.push(DeployedZed {
                    zed_id: format!("g{i:03}-{j:03}"),
                    x_m: i as f64 * spacing_m,
                    y_m: j as f64 * spacing_m,
                    profile_name: profile_name.to_string(),
                });
            }
        }
        Ok(ZedDeployment { zeds })
    }

    /// Homogeneous Poisson deployment with `density` tags per square meter.
    pub fn poisson<R: Rng>(
        arena: &Arena,
        density: f64,
        profile_name: &str,
        rng: &mut R,
    ) -> Result<Self> {
        arena.validate()?;
        let n = poisson_count(density * arena.area(), rng)?;
        let zeds = (0..n)
            .map(|i| DeployedZed {
                zed_id: format!("p{i:05}"),
                x_m: rng.random::<f64>() * arena.width_m,
                y_m: rng.random::<f64>() * arena.height_m,
                profile_name: profile_name.to_string(),
            })
            .collect();
        Ok(ZedDeployment { zeds })
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut rdr = csv::Reader::from_reader(file);
        let zeds = rdr
            .deserialize()
            .collect::<std::result::Result<Vec<DeployedZed>, _>>()?;
        Self::new(zeds)
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for z in &self.zeds {
            w.serialize(z)?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

fn poisson_count<R: Rng>(mean: f64, rng: &mut R) -> Result<u64> {
    if !(mean >= 0.0) || !mean.is_finite() {
        return Err(Error::domain(format!("Poisson mean must be >= 0, got {mean}")));
    }
    if mean == 0.0 {
        return Ok(0);
    }
    let p = Poisson::new(mean).map_err(|e| Error::domain(e.to_string()))?;
    Ok(p.sample(rng) as u64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Detection {
    pub zed_id: String,
    pub backscatter_power_dbm: f64,
    pub direct_power_dbm: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DetectionSet {
    pub detections: Vec<Detection>,
}

/// Bistatic budget used to decide which tags a UE can read.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensingModel {
    pub link: BistaticLink,
    pub d_ue_bs_km: f64,
    /// Standard deviation of lognormal jitter on reported powers, dB.
    pub power_jitter_db: f64,
}

impl SensingModel {
    pub fn new(link: BistaticLink, d_ue_bs_km: f64) -> Self {
        SensingModel {
            link,
            d_ue_bs_km,
            power_jitter_db: 0.0,
        }
    }

    pub fn read_radius_m(&self) -> Result<f64> {
        Ok(self.link.max_reading_distance(self.d_ue_bs_km)?.meters_or_zero())
    }
}

/// Tags whose bistatic margin is non-negative at their true distance from `ue`.
///
/// Every tag is evaluated with the model's ZED profile; `profile_name` is a label.
pub fn simulate_detections(
    ue: Point,
    deployment: &ZedDeployment,
    model: &SensingModel,
    seed: u64,
) -> Result<DetectionSet> {
    deployment.validate()?;
    let jitter = if model.power_jitter_db > 0.0 {
        Some(Normal::new(0.0, model.power_jitter_db).map_err(|e| Error::domain(e.to_string()))?)
    } else {
        None
    };
    let mut rng = trial_rng(seed, 0);
    let mut detections = Vec::new();
    for z in &deployment.zeds {
        let b = model
            .link
            .breakdown_clamped(model.d_ue_bs_km, ue.distance(&z.position()))?;
        if b.margin_db < 0.0 {
            continue;
        }
        let mut bs = b.backscatter_rx_power_dbm;
        let mut direct = b.direct_rx_power_dbm;
        if let Some(n) = &jitter {
            bs += n.sample(&mut rng);
            direct += n.sample(&mut rng);
        }
        detections.push(Detection {
            zed_id: z.zed_id.clone(),
            backscatter_power_dbm: bs,
            direct_power_dbm: direct,
        });
    }
    Ok(DetectionSet { detections })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Weighting {
    /// Linear backscatter power.
    #[default]
    Power,
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum Fix {
    Position { estimate: Point, uncertainty_m: f64 },
    NoFix,
}

impl Fix {
    pub fn estimate(&self) -> Option<Point> {
        match *self {
            Fix::Position { estimate, .. } => Some(estimate),
            Fix::NoFix => None,
        }
    }
}

/// Centroid of the detected tags.
pub fn proximity_estimate(
    detections: &DetectionSet,
    deployment: &ZedDeployment,
    weighting: Weighting,
    read_radius_m: f64,
) -> Result<Fix> {
    if detections.detections.is_empty() {
        return Ok(Fix::NoFix);
    }
    let mut anchors = Vec::with_capacity(detections.detections.len());
    for d in &detections.detections {
        let z = deployment.get(&d.zed_id).ok_or_else(|| {
            Error::config(format!("detected ZED {:?} is not in the deployment", d.zed_id))
        })?;
        if !d.backscatter_power_dbm.is_finite() {
            return Err(Error::domain(format!("ZED {:?} has non-finite power", d.zed_id)));
        }
        anchors.push((z.position(), d.backscatter_power_dbm));
    }
    // Normalise against the strongest tag so large dBm values stay finite.
    let peak = anchors.iter().map(|a| a.1).fold(f64::NEG_INFINITY, f64::max);
    let (mut sx, mut sy, mut sw) = (0.0, 0.0, 0.0);
    for (p, dbm) in &anchors {
        let w = match weighting {
            Weighting::Power => db_to_linear(dbm - peak),
            Weighting::Uniform => 1.0,
        };
        sx += w * p.x;
        sy += w * p.y;
        sw += w;
    }
    let estimate = Point::new(sx / sw, sy / sw);
    let spread = anchors
        .iter()
        .map(|(p, _)| p.distance(&estimate))
        .fold(0.0, f64::max);
    Ok(Fix::Position {
        estimate,
        uncertainty_m: spread + read_radius_m,
    })
}

/// Fixed gains and losses between the direct and backscattered paths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RangingChain {
    pub carrier: Frequency,
    pub leg_gain_dbi: f64,
    pub modulation_loss_db: f64,
}

impl RangingChain {
    /// Backscatter-to-direct ratio a tag `d` meters from the UE produces.
    pub fn forward(&self, d_m: f64) -> Result<f64> {
        let fspl = crate::propagation::free_space_path_loss(self.carrier, d_m)?;
        Ok(-fspl + 2.0 * self.leg_gain_dbi - self.modulation_loss_db)
    }
}

/// UE-ZED distance implied by the backscatter-to-direct power ratio.
pub fn power_ratio_range(
    direct_power_dbm: f64,
    backscatter_power_dbm: f64,
    chain: &RangingChain,
) -> Result<f64> {
    let ratio = backscatter_power_dbm - direct_power_dbm;
    let fspl = 2.0 * chain.leg_gain_dbi - chain.modulation_loss_db - ratio;
    if !(fspl >= 0.0) {
        return Err(Error::domain(format!(
            "ratio {ratio:.2} dB implies a negative free-space loss"
        )));
    }
    Ok(free_space_distance(chain.carrier, fspl))
}

/// Chance that a point has at least one Poisson-deployed tag within `read_radius_m`.
pub fn coverage_probability(density: f64, read_radius_m: f64) -> Result<f64> {
    if !(density >= 0.0) || !(read_radius_m >= 0.0) {
        return Err(Error::domain("density and radius must be non-negative"));
    }
    Ok(1.0 - (-density * PI * read_radius_m * read_radius_m).exp())
}

/// Covered fraction over `trials` independent Poisson deployments.
pub fn coverage_monte_carlo(density: f64, read_radius_m: f64, trials: u64, seed: u64) -> Result<f64> {
    coverage_probability(density, read_radius_m)?;
    if trials == 0 {
        return Err(Error::domain("trials must be at least 1"));
    }
    // Square just enclosing the disk around the origin.
    let side = 2.0 * read_radius_m;
    let hits: u64 = (0..trials)
        .into_par_iter()
        .map(|t| -> Result<u64> {
            let mut rng = trial_rng(seed, t);
            let n = poisson_count(density * side * side, &mut rng)?;
            let hit = (0..n).any(|_| {
                let x = (rng.random::<f64>() - 0.5) * side;
                let y = (rng.random::<f64>() - 0.5) * side;
                x.hypot(y) <= read_radius_m
            });
            Ok(hit as u64)
        })
        .sum::<Result<u64>>()?;
    Ok(hits as f64 / trials as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PositioningStats {
    pub trials: u64,
    pub fixes: u64,
    pub no_fix_rate: f64,
    pub mean_error_m: f64,
    pub median_error_m: f64,
    pub p90_error_m: f64,
    pub max_error_m: f64,
    pub read_radius_m: f64,
    /// Sorted errors of the trials that produced a fix.
    #[serde(skip)]
    pub errors_m: Vec<f64>,
}

/// Error statistics for UEs dropped uniformly over the arena.
pub fn positioning_error_mc(
    deployment: &ZedDeployment,
    arena: &Arena,
    model: &SensingModel,
    weighting: Weighting,
    n_trials: u64,
    seed: u64,
) -> Result<PositioningStats> {
    arena.validate()?;
    deployment.validate()?;
    if n_trials == 0 {
        return Err(Error::config("at least one trial is required"));
    }
    let radius = model.read_radius_m()?;
    let outcomes = (0..n_trials)
        .into_par_iter()
        .map(|t| -> Result<Option<f64>> {
            let mut rng = trial_rng(seed, t);
            let ue = Point::new(
                rng.random::<f64>() * arena.width_m,
                rng.random::<f64>() * arena.height_m,
            );
            let det_seed = rng.random::<u64>();
            let det = simulate_detections(ue, deployment, model, det_seed)?;
            Ok(proximity_estimate(&det, deployment, weighting, radius)?
                .estimate()
                .map(|p| p.distance(&ue)))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut errors: Vec<f64> = outcomes.iter().flatten().copied().collect();
    errors.sort_by(f64::total_cmp);
    let fixes = errors.len() as u64;
    Ok(PositioningStats {
        trials: n_trials,
        fixes,
        no_fix_rate: (n_trials - fixes) as f64 / n_trials as f64,
        mean_error_m: mean(&errors),
        median_error_m: quantile_sorted(&errors, 0.5),
        p90_error_m: quantile_sorted(&errors, 0.9),
        max_error_m: errors.last().copied().unwrap_or(f64::NAN),
        read_radius_m: radius,
        errors_m: errors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linkbudget::ZedProfile;
    use crate::stats::binomial_sigma;
    use proptest::prelude::*;

    fn zed(id: &str, x: f64, y: f64) -> DeployedZed {
        DeployedZed {
            zed_id: id.into(),
            x_m: x,
            y_m: y,
            profile_name: "sub6".into(),
        }
    }

    fn det(id: &str, dbm: f64) -> Detection {
        Detection {
            zed_id: id.into(),
            backscatter_power_dbm: dbm,
            direct_power_dbm: -80.0,
        }
    }

    fn model768() -> SensingModel {
        SensingModel::new(BistaticLink::new(Frequency::from_mhz(768.0).unwrap()).unwrap(), 1.0)
    }

    #[test]
    fn deployment_rejects_duplicates_and_nan() {
        assert!(ZedDeployment::new(vec![zed("a", 0.0, 0.0), zed("a", 1.0, 0.0)]).is_err());
        assert!(ZedDeployment::new(vec![zed("a", f64::NAN, 0.0)]).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let d = ZedDeployment::grid(&Arena { width_m: 10.0, height_m: 5.0 }, 5.0, "sub6").unwrap();
        assert_eq!(d.len(), 6);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("zeds.csv");
        d.write_csv(std::fs::File::create(&path).unwrap()).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("zed_id,x_m,y_m,profile_name\n"));
        assert_eq!(ZedDeployment::read_csv(&path).unwrap(), d);
    }

    #[test]
    fn colocated_tag_is_detected() {
        let d = ZedDeployment::new(vec![zed("a", 3.0, 4.0), zed("far", 50.0, 0.0)]).unwrap();
        let set = simulate_detections(Point::new(3.0, 4.0), &d, &model768(), 1).unwrap();
        assert_eq!(set.detections.len(), 1);
        assert_eq!(set.detections[0].zed_id, "a");
    }

    #[test]
    fn distant_tags_are_missed() {
        let d = ZedDeployment::new(vec![zed("a", 10.0, 0.0), zed("b", 0.0, -7.0)]).unwrap();
        let set = simulate_detections(Point::default(), &d, &model768(), 1).unwrap();
        assert!(set.detections.is_empty());
        assert_eq!(
            proximity_estimate(&set, &d, Weighting::Power, 2.6).unwrap(),
            Fix::NoFix
        );
    }

    #[test]
    fn detections_stay_inside_read_radius() {
        let m = model768();
        let r = m.read_radius_m().unwrap();
        assert!((r - 2.55).abs() < 0.05, "{r}");
        let arena = Arena { width_m: 12.0, height_m: 12.0 };
        let d = ZedDeployment::grid(&arena, 1.0, "sub6").unwrap();
        let ue = Point::new(5.3, 6.1);
        let set = simulate_detections(ue, &d, &m, 0).unwrap();
        assert!(!set.detections.is_empty());
        for x in &set.detections {
            assert!(d.get(&x.zed_id).unwrap().position().distance(&ue) <= r + 1e-9);
        }
    }

    #[test]
    fn jitter_is_seeded() {
        let mut m = model768();
        m.power_jitter_db = 3.0;
        let d = ZedDeployment::new(vec![zed("a", 1.0, 0.0)]).unwrap();
        let a = simulate_detections(Point::default(), &d, &m, 4).unwrap();
        let b = simulate_detections(Point::default(), &d, &m, 4).unwrap();
        let c = simulate_detections(Point::default(), &d, &m, 5).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn centroid_examples() {
        let d = ZedDeployment::new(vec![
            zed("a", 0.0, 0.0),
            zed("b", 4.0, 0.0),
            zed("c", 0.0, 4.0),
            zed("e", 2.0, 0.0),
        ])
        .unwrap();
        let one = DetectionSet { detections: vec![det("b", -90.0)] };
        match proximity_estimate(&one, &d, Weighting::Power, 2.6).unwrap() {
            Fix::Position { estimate, uncertainty_m } => {
                assert_eq!(estimate, Point::new(4.0, 0.0));
                assert_eq!(uncertainty_m, 2.6);
            }
            Fix::NoFix => panic!("expected a fix"),
        }
        let two = DetectionSet { detections: vec![det("a", -90.0), det("e", -90.0)] };
        let p = proximity_estimate(&two, &d, Weighting::Power, 0.0).unwrap().estimate().unwrap();
        assert!(p.distance(&Point::new(1.0, 0.0)) < 1e-12);
        // Linear weights 2:1:1.
        let three = DetectionSet {
            detections: vec![det("a", -90.0 + 10.0 * 2f64.log10()), det("b", -90.0), det("c", -90.0)],
        };
        let p = proximity_estimate(&three, &d, Weighting::Power, 0.0).unwrap().estimate().unwrap();
        assert!(p.distance(&Point::new(1.0, 1.0)) < 1e-12, "{p:?}");
        let p = proximity_estimate(&three, &d, Weighting::Uniform, 0.0).unwrap().estimate().unwrap();
        assert!(p.distance(&Point::new(4.0 / 3.0, 4.0 / 3.0)) < 1e-12);
    }

    #[test]
    fn unknown_id_is_rejected() {
        let d = ZedDeployment::new(vec![zed("a", 0.0, 0.0)]).unwrap();
        let s = DetectionSet { detections: vec![det("zz", -90.0)] };
        assert!(proximity_estimate(&s, &d, Weighting::Power, 1.0).is_err());
    }

    fn chain768() -> RangingChain {
        RangingChain {
            carrier: Frequency::from_mhz(768.0).unwrap(),
            leg_gain_dbi: 0.0,
            modulation_loss_db: 6.0,
        }
    }

    #[test]
    fn ranging_examples() {
        let c = chain768();
        let d = power_ratio_range(-80.0, -80.0 - 38.5, &c).unwrap();
        // Oracle: 10^((32.5 - 20 log10(4 pi f / c)) / 20).
        let k = 20.0 * (4.0 * PI * 768e6 / 299_792_458.0f64).log10();
        let oracle = 10f64.powf((32.5 - k) / 20.0);
        assert!((d - oracle).abs() < 1e-12);
        assert!((d - 1.31).abs() < 0.01);
        let doubled = power_ratio_range(-80.0, -80.0 - 38.5 - 20.0 * 2f64.log10(), &c).unwrap();
        assert!((doubled / d - 2.0).abs() < 1e-12);
        assert!(matches!(power_ratio_range(-80.0, -70.0, &c), Err(Error::Domain(_))));
    }

    #[test]
    fn ranging_agrees_with_budget_powers() {
        let m = model768();
        let b = m.link.breakdown(m.d_ue_bs_km, 2.0).unwrap();
        let d = power_ratio_range(b.direct_rx_power_dbm, b.backscatter_rx_power_dbm, &chain768()).unwrap();
        assert!((d - 2.0).abs() < 1e-9);
    }

    #[test]
    fn coverage_closed_form() {
        assert!((coverage_probability(0.05, 5.0).unwrap() - 0.980).abs() < 5e-4);
        assert_eq!(coverage_probability(0.05, 0.0).unwrap(), 0.0);
        assert!(coverage_probability(-1.0, 1.0).is_err());
    }

    #[test]
    fn coverage_monte_carlo_within_three_sigma() {
        let (lam, r, n) = (0.02, 4.0, 10_000);
        let p = coverage_probability(lam, r).unwrap();
        let mc = coverage_monte_carlo(lam, r, n, 8).unwrap();
        assert!((mc - p).abs() < 3.0 * binomial_sigma(p, n), "{mc} vs {p}");
    }

    #[test]
    fn empty_deployment_never_fixes() {
        let arena = Arena { width_m: 10.0, height_m: 10.0 };
        let s = positioning_error_mc(&ZedDeployment::default(), &arena, &model768(), Weighting::Power, 50, 1)
            .unwrap();
        assert_eq!(s.no_fix_rate, 1.0);
        assert!(positioning_error_mc(
            &ZedDeployment::default(),
            &Arena { width_m: 0.0, height_m: 3.0 },
            &model768(),
            Weighting::Power,
            5,
            1
        )
        .is_err());
    }

    #[test]
    fn dense_grid_always_fixes() {
        let m = model768();
        let r = m.read_radius_m().unwrap();
        let spacing = 2.0;
        assert!(spacing <= r);
        let arena = Arena { width_m: 20.0, height_m: 20.0 };
        let d = ZedDeployment::grid(&arena, spacing, "sub6").unwrap();
        let s = positioning_error_mc(&d, &arena, &m, Weighting::Power, 2000, 3).unwrap();
        assert_eq!(s.no_fix_rate, 0.0);
        assert!(s.max_error_m <= r + 1e-9, "{}", s.max_error_m);
        let a = positioning_error_mc(&d, &arena, &m, Weighting::Power, 200, 3).unwrap();
        let b = positioning_error_mc(&d, &arena, &m, Weighting::Power, 200, 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sparse_grid_no_fix_matches_geometry() {
        let m = model768();
        let r = m.read_radius_m().unwrap();
        let s = 5.0;
        // Exact covered area of one lattice cell: four quarter disks minus the
        // four half-lenses where neighbouring disks overlap.
        let lens = 2.0 * r * r * (s / (2.0 * r)).acos() - (s / 2.0) * (4.0 * r * r - s * s).sqrt();
        let uncovered = 1.0 - (PI * r * r - 2.0 * lens) / (s * s);
        let arena = Arena { width_m: 50.0, height_m: 50.0 };
        let d = ZedDeployment::grid(&arena, s, "sub6").unwrap();
        let st = positioning_error_mc(&d, &arena, &m, Weighting::Power, 40_000, 6).unwrap();
        assert!((st.no_fix_rate / uncovered - 1.0).abs() < 0.02, "{} vs {uncovered}", st.no_fix_rate);
    }

    #[test]
    fn mmwave_tag_is_a_mode_error() {
        let mut m = model768();
        m.link.zed = ZedProfile::default_mmwave();
        let d = ZedDeployment::new(vec![zed("a", 0.0, 0.0)]).unwrap();
        assert!(matches!(
            simulate_detections(Point::default(), &d, &m, 0),
            Err(Error::Mode(_))
        ));
    }

    fn cross(o: Point, a: Point, b: Point) -> f64 {
        (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
    }

    // Andrew's monotone chain, counter-clockwise.
    pub(crate) fn convex_hull(mut pts: Vec<Point>) -> Vec<Point> {
        pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
        pts.dedup();
        if pts.len() < 3 {
            return pts;
        }
        let mut hull: Vec<Point> = Vec::new();
        for pass in 0..2 {
            let start = hull.len();
            let iter: Box<dyn Iterator<Item = &Point>> = if pass == 0 {
                Box::new(pts.iter())
            } else {
                Box::new(pts.iter().rev())
            };
            for &p in iter {
                while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
                    hull.pop();
                }
                hull.push(p);
            }
            hull.pop();
        }
        hull
    }

    pub(crate) fn in_hull(hull: &[Point], p: Point, tol: f64) -> bool {
        match hull.len() {
            0 => false,
            1 => hull[0].distance(&p) <= tol,
            2 => {
                let (a, b) = (hull[0], hull[1]);
                let len = a.distance(&b);
                cross(a, b, p).abs() / len <= tol
                    && p.distance(&a) <= len + tol
                    && p.distance(&b) <= len + tol
            }
            n => (0..n).all(|i| cross(hull[i], hull[(i + 1) % n], p) >= -tol),
        }
    }

    proptest! {
        #[test]
        fn estimate_is_inside_hull(
            pts in prop::collection::vec((-20.0f64..20.0, -20.0f64..20.0, -120.0f64..-40.0), 1..8)
        ) {
            let zeds: Vec<DeployedZed> = pts.iter().enumerate()
                .map(|(i, &(x, y, _))| zed(&format!("z{i}"), x, y)).collect();
            let d = ZedDeployment::new(zeds).unwrap();
            let set = DetectionSet {
                detections: pts.iter().enumerate().map(|(i, &(_, _, p))| det(&format!("z{i}"), p)).collect(),
            };
            let hull = convex_hull(d.zeds.iter().map(|z| z.position()).collect());
            let est = proximity_estimate(&set, &d, Weighting::Power, 0.0).unwrap().estimate().unwrap();
            prop_assert!(in_hull(&hull, est, 1e-9));
        }

        #[test]
        fn common_power_offset_does_not_move_estimate(
            pts in prop::collection::vec((-20.0f64..20.0, -20.0f64..20.0, -120.0f64..-40.0), 1..8),
            offset in -30.0f64..30.0,
        ) {
            let zeds: Vec<DeployedZed> = pts.iter().enumerate()
                .map(|(i, &(x, y, _))| zed(&format!("z{i}"), x, y)).collect();
            let d = ZedDeployment::new(zeds).unwrap();
            let make = |o: f64| DetectionSet {
                detections: pts.iter().enumerate().map(|(i, &(_, _, p))| det(&format!("z{i}"), p + o)).collect(),
            };
            let a = proximity_estimate(&make(0.0), &d, Weighting::Power, 0.0).unwrap().estimate().unwrap();
            let b = proximity_estimate(&make(offset), &d, Weighting::Power, 0.0).unwrap().estimate().unwrap();
            prop_assert!(a.distance(&b) < 1e-9);
        }

        #[test]
        fn ranging_round_trip(d in 0.1f64..50.0) {
            let c = chain768();
            let ratio = c.forward(d).unwrap();
            let back = power_ratio_range(-70.0, -70.0 + ratio, &c).unwrap();
            prop_assert!((back - d).abs() < 1e-9);
        }

        #[test]
        fn coverage_monotone(l1 in 0.0f64..1.0, l2 in 0.0f64..1.0, r1 in 0.0f64..10.0, r2 in 0.0f64..10.0) {
            let (lo_l, hi_l) = if l1 <= l2 { (l1, l2) } else { (l2, l1) };
            let (lo_r, hi_r) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
            prop_assert!(coverage_probability(lo_l, lo_r).unwrap() <= coverage_probability(hi_l, lo_r).unwrap());
            prop_assert!(coverage_probability(lo_l, lo_r).unwrap() <= coverage_probability(lo_l, hi_r).unwrap());
        }
    }
}
