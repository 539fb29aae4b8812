//! Plain-text tables for run outputs: `#`-prefixed `key: value` metadata
//! lines, a header row, then comma-separated data. Floats use Rust's
//! shortest round-trip formatting, so equal inputs give byte-identical files.

use std::fmt::{self, Display, Write as _};

use crate::correlators::{CorrelatorEstimate, UnfoldedPoint};
use crate::distribution::{WindingHistogram, WindingPMF};
use crate::ensembles::SphericalSpectrum;
use crate::generators::GeneratorValue;
use crate::kitaev::{d_vector, Dispersion, KitaevParams};
use crate::winding::WindingRecord;
use num_complex::Complex64;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CsvTable {
    meta: Vec<(String, String)>,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self { meta: Vec::new(), header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn meta(&mut self, key: impl Into<String>, value: impl Display) -> &mut Self {
        self.meta.push((key.into(), value.to_string()));
        self
    }

    /// Inserts `key: value` lines ahead of the existing metadata, in order.
    pub fn prepend_meta<K: Into<String>, V: Display>(&mut self, entries: impl IntoIterator<Item = (K, V)>) -> &mut Self {
        let mut front: Vec<(String, String)> = entries.into_iter().map(|(k, v)| (k.into(), v.to_string())).collect();
        front.append(&mut self.meta);
        self.meta = front;
        self
    }

    /// Appends a row; panics if its width differs from the header.
    pub fn row(&mut self, cells: Vec<String>) -> &mut Self {
        assert_eq!(cells.len(), self.header.len(), "row width does not match header");
        self.rows.push(cells);
        self
    }

    pub fn rows(&self) -> usize {
        self.rows.len()
    }

    pub fn header(&self) -> &[String] {
        &self.header
    }
}

impl Display for CsvTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        for (k, v) in &self.meta {
            writeln!(s, "# {k}: {v}")?;
        }
        writeln!(s, "{}", self.header.join(","))?;
        for r in &self.rows {
            writeln!(s, "{}", r.join(","))?;
        }
        f.write_str(&s)
    }
}

/// Shortest round-trip form; exponent notation outside `[1e-4, 1e16)`.
/// Negative zero prints as `0`.
pub fn num(x: f64) -> String {
    let x = if x == 0.0 { 0.0 } else { x };
    let a = x.abs();
    if a != 0.0 && a.is_finite() && !(1e-4..1e16).contains(&a) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

fn int(x: impl Display) -> String {
    x.to_string()
}

/// `draw_id, re, im`, one row per eigenvalue.
pub fn spectra_table<'a>(spectra: impl IntoIterator<Item = (u64, &'a SphericalSpectrum)>) -> CsvTable {
    let mut t = CsvTable::new(["draw_id", "re", "im"]);
    for (id, s) in spectra {
        for z in &s.z {
            t.row(vec![int(id), num(z.re), num(z.im)]);
        }
    }
    t
}

/// `draw_id, W, m_inside, residual, grid`.
pub fn winding_table<'a>(records: impl IntoIterator<Item = (u64, &'a WindingRecord)>) -> CsvTable {
    let mut t = CsvTable::new(["draw_id", "W", "m_inside", "residual", "grid"]);
    for (id, r) in records {
        t.row(vec![int(id), int(r.w), int(r.m_inside), num(r.residual), int(r.grid_size)]);
    }
    t
}

/// `p, re_w, im_w`.
pub fn density_table(profile: &[(f64, Complex64)]) -> CsvTable {
    let mut t = CsvTable::new(["p", "re_w", "im_w"]);
    for (p, w) in profile {
        t.row(vec![num(*p), num(w.re), num(w.im)]);
    }
    t
}

/// `k, E_plus, E_minus, d_y, d_z`.
pub fn kitaev_band_table(params: &KitaevParams, disp: &Dispersion) -> CsvTable {
    let mut t = CsvTable::new(["k", "E_plus", "E_minus", "d_y", "d_z"]);
    for (i, &k) in disp.k.iter().enumerate() {
        let d = d_vector(params, k);
        t.row(vec![num(k), num(disp.e_plus[i]), num(disp.e_minus[i]), num(d.dy), num(d.dz)]);
    }
    t
}

/// `W, P_exact, P_mc, mc_err`; the MC columns are empty without a histogram.
pub fn pmf_table(pmf: &WindingPMF, hist: Option<&WindingHistogram>) -> CsvTable {
    let mut t = CsvTable::new(["W", "P_exact", "P_mc", "mc_err"]);
    for (i, (&w, &p)) in pmf.support.iter().zip(&pmf.probs).enumerate() {
        let (mc, err) = match hist {
            Some(h) => (num(h.frequency(i)), num(h.stderr(i))),
            None => (String::new(), String::new()),
        };
        t.row(vec![int(w), num(p), mc, err]);
    }
    t
}

/// `p1, p2, mc_mean_re, mc_mean_im, stderr, analytic, trials, skipped` for
/// two-point estimates; `analytic` is empty where no closed form applies.
pub fn correlator_table(rows: &[(CorrelatorEstimate, Option<f64>)]) -> CsvTable {
    let mut t = CsvTable::new(["p1", "p2", "mc_mean_re", "mc_mean_im", "stderr", "analytic", "trials", "skipped"]);
    for (e, a) in rows {
        let p2 = e.points.get(1).map(|x| num(*x)).unwrap_or_default();
        t.row(vec![
            num(e.points[0]),
            p2,
            num(e.mean.re),
            num(e.mean.im),
            num(e.stderr),
            a.map(num).unwrap_or_default(),
            int(e.trials),
            int(e.skipped),
        ]);
    }
    t
}

/// `N, alpha, psi_delta, unfolded, limit`.
pub fn unfold_table(rows: &[(UnfoldedPoint, f64)]) -> CsvTable {
    let mut t = CsvTable::new(["N", "alpha", "psi_delta", "unfolded", "limit"]);
    for (u, lim) in rows {
        t.row(vec![int(u.n), num(u.alpha), num(u.psi[0] - u.psi[1]), num(u.value), num(*lim)]);
    }
    t
}

/// `k, q1…qk, p1…pk, Z_mc_re, Z_mc_im, stderr, Z_analytic_re, Z_analytic_im`.
pub fn generator_table(k: usize, rows: &[(GeneratorValue, Option<Complex64>)]) -> CsvTable {
    let mut header = vec!["k".to_string()];
    header.extend((1..=k).map(|i| format!("q{i}")));
    header.extend((1..=k).map(|i| format!("p{i}")));
    header.extend(["Z_mc_re", "Z_mc_im", "stderr", "Z_analytic_re", "Z_analytic_im"].map(String::from));
    let mut t = CsvTable::new(header);
    for (g, a) in rows {
        let mut r = vec![int(k)];
        r.extend(g.q.iter().map(|x| num(*x)));
        r.extend(g.p.iter().map(|x| num(*x)));
        r.push(num(g.value.re));
        r.push(num(g.value.im));
        r.push(g.stderr.map(|s| num(s.0)).unwrap_or_default());
        r.push(a.map(|z| num(z.re)).unwrap_or_default());
        r.push(a.map(|z| num(z.im)).unwrap_or_default());
        t.row(r);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distribution::winding_pmf;

    #[test]
    fn layout() {
        let mut t = CsvTable::new(["a", "b"]);
        t.meta("seed", 7).row(vec![num(0.1), num(-2.0)]);
        assert_eq!(t.to_string(), "# seed: 7\na,b\n0.1,-2\n");
        t.prepend_meta([("run", "x"), ("n", "4")]);
        assert!(t.to_string().starts_with("# run: x\n# n: 4\n# seed: 7\n"));
    }

    #[test]
    fn number_format_round_trips() {
        for x in [0.0, 1.5, -2.0, 2.1157971791628800e-15, 1e20, 0.1 + 0.2, f64::MIN_POSITIVE] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(num(2.5e-9), "2.5e-9");
        assert_eq!(num(0.001), "0.001");
        assert_eq!(num(-0.0), "0");
    }

    #[test]
    #[should_panic]
    fn row_width_checked() {
        CsvTable::new(["a"]).row(vec!["1".into(), "2".into()]);
    }

    #[test]
    fn pmf_without_mc() {
        let out = pmf_table(&winding_pmf(1).unwrap(), None).to_string();
        let lines: Vec<&str> = out.lines().collect();
        assert_eq!(lines[0], "W,P_exact,P_mc,mc_err");
        assert!(lines[1].starts_with("-1,") && lines[1].ends_with(",,"));
        let p: f64 = lines[2].split(',').nth(1).unwrap().parse().unwrap();
        assert!((p - 0.5).abs() < 1e-15);
    }
}
