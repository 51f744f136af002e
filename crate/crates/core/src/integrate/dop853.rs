//! Dormand-Prince 8(5,3) embedded pair with Hairer's error estimate and step control.

// Tableau constants are kept exactly as published.
#![allow(clippy::excessive_precision)]

use super::{IntegrationError, IntegratorConfig};

const C2: f64 = 0.526001519587677318785587544488e-01;
const C3: f64 = 0.789002279381515978178381316732e-01;
const C4: f64 = 0.118350341907227396726757197510e+00;
const C5: f64 = 0.281649658092772603273242802490e+00;
const C6: f64 = 0.333333333333333333333333333333e+00;
const C7: f64 = 0.25e+00;
const C8: f64 = 0.307692307692307692307692307692e+00;
const C9: f64 = 0.651282051282051282051282051282e+00;
const C10: f64 = 0.6e+00;
const C11: f64 = 0.857142857142857142857142857142e+00;

const B1: f64 = 5.42937341165687622380535766363e-2;
const B6: f64 = 4.45031289275240888144113950566e0;
const B7: f64 = 1.89151789931450038304281599044e0;
const B8: f64 = -5.8012039600105847814672114227e0;
const B9: f64 = 3.1116436695781989440891606237e-1;
const B10: f64 = -1.52160949662516078556178806805e-1;
const B11: f64 = 2.01365400804030348374776537501e-1;
const B12: f64 = 4.47106157277725905176885569043e-2;

const BHH1: f64 = 0.244094488188976377952755905512e+00;
const BHH2: f64 = 0.733846688281611857341361741547e+00;
const BHH3: f64 = 0.220588235294117647058823529412e-01;

const ER1: f64 = 0.1312004499419488073250102996e-01;
const ER6: f64 = -0.1225156446376204440720569753e+01;
const ER7: f64 = -0.4957589496572501915214079952e+00;
const ER8: f64 = 0.1664377182454986536961530415e+01;
const ER9: f64 = -0.3503288487499736816886487290e+00;
const ER10: f64 = 0.3341791187130174790297318841e+00;
const ER11: f64 = 0.8192320648511571246570742613e-01;
const ER12: f64 = -0.2235530786388629525884427845e-01;

// Nonzero stage couplings, (stage index, coefficient) per stage 2..12.
const A2: &[(usize, f64)] = &[(0, 5.26001519587677318785587544488e-2)];
const A3: &[(usize, f64)] = &[
    (0, 1.97250569845378994544595329183e-2),
    (1, 5.91751709536136983633785987549e-2),
];
const A4: &[(usize, f64)] = &[
    (0, 2.95875854768068491816892993775e-2),
    (2, 8.87627564304205475450678981324e-2),
];
const A5: &[(usize, f64)] = &[
    (0, 2.41365134159266685502369798665e-1),
    (2, -8.84549479328286085344864962717e-1),
    (3, 9.24834003261792003115737966543e-1),
];
const A6: &[(usize, f64)] = &[
    (0, 3.7037037037037037037037037037e-2),
    (3, 1.70828608729473871279604482173e-1),
    (4, 1.25467687566822425016691814123e-1),
];
const A7: &[(usize, f64)] = &[
    (0, 3.7109375e-2),
    (3, 1.70252211019544039314978060272e-1),
    (4, 6.02165389804559606850219397283e-2),
    (5, -1.7578125e-2),
];
const A8: &[(usize, f64)] = &[
    (0, 3.70920001185047927108779319836e-2),
    (3, 1.70383925712239993810214054705e-1),
    (4, 1.07262030446373284651809199168e-1),
    (5, -1.53194377486244017527936158236e-2),
    (6, 8.27378916381402288758473766002e-3),
];
const A9: &[(usize, f64)] = &[
    (0, 6.24110958716075717114429577812e-1),
    (3, -3.36089262944694129406857109825e0),
    (4, -8.68219346841726006818189891453e-1),
    (5, 2.75920996994467083049415600797e1),
    (6, 2.01540675504778934086186788979e1),
    (7, -4.34898841810699588477366255144e1),
];
const A10: &[(usize, f64)] = &[
    (0, 4.77662536438264365890433908527e-1),
    (3, -2.48811461997166764192642586468e0),
    (4, -5.90290826836842996371446475743e-1),
    (5, 2.12300514481811942347288949897e1),
    (6, 1.52792336328824235832596922938e1),
    (7, -3.32882109689848629194453265587e1),
    (8, -2.03312017085086261358222928593e-2),
];
const A11: &[(usize, f64)] = &[
    (0, -9.3714243008598732571704021658e-1),
    (3, 5.18637242884406370830023853209e0),
    (4, 1.09143734899672957818500254654e0),
    (5, -8.14978701074692612513997267357e0),
    (6, -1.85200656599969598641566180701e1),
    (7, 2.27394870993505042818970056734e1),
    (8, 2.49360555267965238987089396762e0),
    (9, -3.0467644718982195003823669022e0),
];
const A12: &[(usize, f64)] = &[
    (0, 2.27331014751653820792359768449e0),
    (3, -1.05344954667372501984066689879e1),
    (4, -2.00087205822486249909675718444e0),
    (5, -1.79589318631187989172765950534e1),
    (6, 2.79488845294199600508499808837e1),
    (7, -2.85899827713502369474065508674e0),
    (8, -8.87285693353062954433549289258e0),
    (9, 1.23605671757943030647266201528e1),
    (10, 6.43392746015763530355970484046e-1),
];

const STAGES: [(f64, &[(usize, f64)]); 11] = [
    (C2, A2),
    (C3, A3),
    (C4, A4),
    (C5, A5),
    (C6, A6),
    (C7, A7),
    (C8, A8),
    (C9, A9),
    (C10, A10),
    (C11, A11),
    (1.0, A12),
];

const B: [(usize, f64); 8] =
    [(0, B1), (5, B6), (6, B7), (7, B8), (8, B9), (9, B10), (10, B11), (11, B12)];
const ER: [(usize, f64); 8] =
    [(0, ER1), (5, ER6), (6, ER7), (7, ER8), (8, ER9), (9, ER10), (10, ER11), (11, ER12)];

const SAFE: f64 = 0.9;
const FAC_MIN: f64 = 0.333;
const FAC_MAX: f64 = 6.0;

/// Integrates `y' = f(t, y)` from `t0` to `t1` in place.
pub fn integrate<F>(
    mut f: F,
    t0: f64,
    t1: f64,
    y: &mut [f64],
    cfg: &IntegratorConfig,
) -> Result<(), IntegrationError>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let n = y.len();
    if t1 == t0 {
        return Ok(());
    }
    let dir = (t1 - t0).signum();
    let span = (t1 - t0).abs();
    let mut k: Vec<Vec<f64>> = vec![vec![0.0; n]; 12];
    let mut ytmp = vec![0.0; n];
    let mut ynew = vec![0.0; n];
    let mut t = t0;
    f(t, y, &mut k[0]);
    if !k[0].iter().all(|v| v.is_finite()) {
        return Err(IntegrationError::NonFinite { t });
    }
    let mut h = if cfg.initial_step > 0.0 {
        cfg.initial_step.min(span)
    } else {
        initial_step(&mut f, t, y, &k[0], dir, cfg, &mut ytmp, &mut ynew).min(span)
    };
    let mut steps = 0usize;
    let mut rejected_last = false;
    loop {
        let remaining = (t1 - t).abs();
        let last = h >= remaining * (1.0 - 1e-14);
        if last {
            h = remaining;
        }
        if steps >= cfg.max_steps {
            return Err(IntegrationError::StepLimit { t, steps });
        }
        steps += 1;
        let hs = dir * h;
        for (s, &(c, a)) in STAGES.iter().enumerate() {
            for i in 0..n {
                let mut acc = 0.0;
                for &(j, aij) in a {
                    acc += aij * k[j][i];
                }
                ytmp[i] = y[i] + hs * acc;
            }
            f(t + c * hs, &ytmp, &mut k[s + 1]);
        }
        let mut err5 = 0.0;
        let mut err3 = 0.0;
        for i in 0..n {
            let mut bsum = 0.0;
            for &(j, b) in &B {
                bsum += b * k[j][i];
            }
            ynew[i] = y[i] + hs * bsum;
            // Third-order and fifth-order embedded differences.
            let e3 = bsum - BHH1 * k[0][i] - BHH2 * k[8][i] - BHH3 * k[11][i];
            let mut e5 = 0.0;
            for &(j, e) in &ER {
                e5 += e * k[j][i];
            }
            let sk = cfg.abs_tol + cfg.rel_tol * y[i].abs().max(ynew[i].abs());
            err5 += (e5 / sk).powi(2);
            err3 += (e3 / sk).powi(2);
        }
        let deno = if err5 + 0.01 * err3 > 0.0 { err5 + 0.01 * err3 } else { 1.0 };
        let err = h * err5 * (1.0 / (n as f64 * deno)).sqrt();
        if !err.is_finite() || !ynew.iter().all(|v| v.is_finite()) {
            h *= 0.25;
            rejected_last = true;
            if h < 1e-14 * t.abs().max(1.0) {
                return Err(IntegrationError::NonFinite { t });
            }
            continue;
        }
        let fac = (err.powf(0.125) / SAFE).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
        let mut h_new = h / fac;
        if err <= 1.0 {
            t = if last { t1 } else { t + hs };
            y.copy_from_slice(&ynew);
            if last {
                return Ok(());
            }
            f(t, y, &mut k[0]);
            if !k[0].iter().all(|v| v.is_finite()) {
                return Err(IntegrationError::NonFinite { t });
            }
            if rejected_last {
                h_new = h_new.min(h);
            }
            rejected_last = false;
        } else {
            rejected_last = true;
            if h_new < 1e-14 * t.abs().max(1.0) {
                return Err(IntegrationError::NonFinite { t });
            }
        }
        h = h_new;
    }
}

/// Starting step estimate following Hairer and Wanner.
#[allow(clippy::too_many_arguments)]
fn initial_step<F>(
    f: &mut F,
    t: f64,
    y: &[f64],
    f0: &[f64],
    dir: f64,
    cfg: &IntegratorConfig,
    y1: &mut [f64],
    f1: &mut [f64],
) -> f64
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let n = y.len() as f64;
    let sk = |v: f64| cfg.abs_tol + cfg.rel_tol * v.abs();
    let dnf = (f0.iter().zip(y).map(|(fi, yi)| (fi / sk(*yi)).powi(2)).sum::<f64>() / n).sqrt();
    let dny = (y.iter().map(|yi| (yi / sk(*yi)).powi(2)).sum::<f64>() / n).sqrt();
    let mut h = if dnf <= 1e-10 || dny <= 1e-10 { 1e-6 } else { 0.01 * dny / dnf };
    for i in 0..y.len() {
        y1[i] = y[i] + dir * h * f0[i];
    }
    f(t + dir * h, y1, f1);
    let der2 = (f1
        .iter()
        .zip(f0)
        .zip(y)
        .map(|((a, b), yi)| ((a - b) / sk(*yi)).powi(2))
        .sum::<f64>()
        / n)
        .sqrt()
        / h;
    let der12 = der2.max(dnf);
    let h1 = if der12.is_finite() && der12 > 1e-15 {
        (0.01 / der12).powf(1.0 / 8.0)
    } else {
        (h * 1e-3).max(1e-6)
    };
    h = (100.0 * h).min(h1);
    if h.is_finite() && h > 0.0 {
        h
    } else {
        1e-6
    }
}
