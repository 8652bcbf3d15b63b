//! G-EQDSK reader and writer.
//!
//! Reals are written in the fixed `5e16.9` layout. The reader accepts both
//! that layout (where adjacent fields may touch, as in `1.0E+00-2.0E+00`) and
//! whitespace-separated values.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use super::{EquilibriumInput, Profile1D};
use crate::mesh::build_structured_mesh;
use crate::spaces::{build_space, Field, SpaceKind};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Geqdsk {
    pub description: String,
    pub idum: i64,
    pub nw: usize,
    pub nh: usize,
    pub rdim: f64,
    pub zdim: f64,
    pub rcentr: f64,
    pub rleft: f64,
    pub zmid: f64,
    pub rmaxis: f64,
    pub zmaxis: f64,
    pub simag: f64,
    pub sibry: f64,
    pub bcentr: f64,
    pub current: f64,
    pub fpol: Vec<f64>,
    pub pres: Vec<f64>,
    pub ffprim: Vec<f64>,
    pub pprime: Vec<f64>,
    /// `nw * nh` values with `r` varying fastest.
    pub psirz: Vec<f64>,
    pub qpsi: Vec<f64>,
    pub boundary: Vec<[f64; 2]>,
    pub limiter: Vec<[f64; 2]>,
}

pub fn read_geqdsk(path: impl AsRef<Path>) -> Result<EquilibriumInput> {
    parse_geqdsk(&std::fs::read_to_string(path)?)?.to_equilibrium()
}

pub fn write_geqdsk(g: &Geqdsk, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, g.to_text())?;
    Ok(())
}

/// Splits a data line into numeric tokens, breaking at signs that do not
/// follow an exponent marker.
fn tokens(line: &str) -> Vec<&str> {
    let mut out = Vec::new();
    for word in line.split_whitespace() {
        let bytes = word.as_bytes();
        let mut start = 0;
        for i in 1..bytes.len() {
            let c = bytes[i];
            let prev = bytes[i - 1];
            if (c == b'-' || c == b'+') && !matches!(prev, b'e' | b'E' | b'd' | b'D') {
                out.push(&word[start..i]);
                start = i;
            }
        }
        out.push(&word[start..]);
    }
    out
}

struct Reader<'a> {
    lines: Vec<&'a str>,
    line: usize,
    pending: std::collections::VecDeque<&'a str>,
}

impl<'a> Reader<'a> {
    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Parse { line: self.line, msg: msg.into() }
    }

    fn next_token(&mut self) -> Option<&'a str> {
        while self.pending.is_empty() {
            let l = *self.lines.get(self.line)?;
            self.line += 1;
            self.pending.extend(tokens(l));
        }
        self.pending.pop_front()
    }

    fn real(&mut self) -> Result<f64> {
        let t = self.next_token().ok_or_else(|| self.err("unexpected end of file"))?;
        t.replace(['d', 'D'], "E").parse().map_err(|_| self.err(format!("malformed real {t:?}")))
    }

    fn reals(&mut self, n: usize) -> Result<Vec<f64>> {
        (0..n).map(|_| self.real()).collect()
    }
}

pub fn parse_geqdsk(text: &str) -> Result<Geqdsk> {
    let lines: Vec<&str> = text.lines().collect();
    let header = *lines.first().ok_or(Error::Parse { line: 1, msg: "empty file".into() })?;
    let words: Vec<&str> = header.split_whitespace().collect();
    if words.len() < 3 {
        return Err(Error::Parse { line: 1, msg: "header needs idum, nw and nh".into() });
    }
    let int = |s: &str| s.parse::<i64>().map_err(|_| Error::Parse { line: 1, msg: format!("malformed integer {s:?}") });
    let n = words.len();
    let idum = int(words[n - 3])?;
    let (nw, nh) = (int(words[n - 2])?, int(words[n - 1])?);
    if nw < 2 || nh < 2 {
        return Err(Error::Parse { line: 1, msg: format!("grid must be at least 2x2, got {nw}x{nh}") });
    }
    let (nw, nh) = (nw as usize, nh as usize);
    let description = header
        .trim_end()
        .strip_suffix(words[n - 1])
        .and_then(|s| s.trim_end().strip_suffix(words[n - 2]))
        .and_then(|s| s.trim_end().strip_suffix(words[n - 3]))
        .unwrap_or("")
        .trim_end()
        .to_string();

    let mut r = Reader { lines, line: 1, pending: Default::default() };
    let s = r.reals(20)?;
    let fpol = r.reals(nw)?;
    let pres = r.reals(nw)?;
    let ffprim = r.reals(nw)?;
    let pprime = r.reals(nw)?;
    let psirz = r.reals(nw * nh)?;
    let qpsi = r.reals(nw)?;

    let pairs = |count: usize, r: &mut Reader| -> Result<Vec<[f64; 2]>> {
        (0..count).map(|_| Ok([r.real()?, r.real()?])).collect()
    };
    let (mut boundary, mut limiter) = (Vec::new(), Vec::new());
    if let Some(t) = r.next_token() {
        let nbbbs: usize = t.parse().map_err(|_| r.err(format!("malformed boundary count {t:?}")))?;
        let t = r.next_token().ok_or_else(|| r.err("missing limiter count"))?;
        let limitr: usize = t.parse().map_err(|_| r.err(format!("malformed limiter count {t:?}")))?;
        boundary = pairs(nbbbs, &mut r)?;
        limiter = pairs(limitr, &mut r)?;
    }

    Ok(Geqdsk {
        description,
        idum,
        nw,
        nh,
        rdim: s[0],
        zdim: s[1],
        rcentr: s[2],
        rleft: s[3],
        zmid: s[4],
        rmaxis: s[5],
        zmaxis: s[6],
        simag: s[7],
        sibry: s[8],
        bcentr: s[9],
        current: s[10],
        fpol,
        pres,
        ffprim,
        pprime,
        psirz,
        qpsi,
        boundary,
        limiter,
    })
}

/// Formats `x` as Fortran `e16.9`, e.g. ` 0.123456789E+01`.
fn e16_9(x: f64) -> String {
    if x == 0.0 {
        return format!("{:>16}", "0.000000000E+00");
    }
    let s = format!("{:.8e}", x.abs());
    let (mantissa, exp) = s.split_once('e').expect("exponent");
    let digits: String = mantissa.chars().filter(|c| c.is_ascii_digit()).collect();
    let exp = exp.parse::<i32>().expect("exponent") + 1;
    let sign = if x < 0.0 { "-" } else { " " };
    let esign = if exp < 0 { '-' } else { '+' };
    format!("{sign}0.{digits}E{esign}{:02}", exp.abs())
}

fn write_block(s: &mut String, values: &[f64]) {
    for chunk in values.chunks(5) {
        for &v in chunk {
            s.push_str(&e16_9(v));
        }
        s.push('\n');
    }
}

impl Geqdsk {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:<48}{:>4}{:>4}{:>4}", self.description, self.idum, self.nw, self.nh);
        let x = 0.0;
        write_block(
            &mut s,
            &[
                self.rdim,
                self.zdim,
                self.rcentr,
                self.rleft,
                self.zmid,
                self.rmaxis,
                self.zmaxis,
                self.simag,
                self.sibry,
                self.bcentr,
                self.current,
                self.simag,
                x,
                self.rmaxis,
                x,
                self.zmaxis,
                x,
                self.sibry,
                x,
                x,
            ],
        );
        for v in [&self.fpol, &self.pres, &self.ffprim, &self.pprime, &self.psirz, &self.qpsi] {
            write_block(&mut s, v);
        }
        let _ = writeln!(s, "{:>5}{:>5}", self.boundary.len(), self.limiter.len());
        write_block(&mut s, &self.boundary.iter().flatten().copied().collect::<Vec<_>>());
        write_block(&mut s, &self.limiter.iter().flatten().copied().collect::<Vec<_>>());
        s
    }

    /// Triangulates the grid and builds `Ψ` and `f = fpol(Ψ)` on it.
    pub fn to_equilibrium(&self) -> Result<EquilibriumInput> {
        let zmin = self.zmid - 0.5 * self.zdim;
        let mesh = Arc::new(build_structured_mesh(
            self.rleft,
            self.rleft + self.rdim,
            zmin,
            zmin + self.zdim,
            self.nw - 1,
            self.nh - 1,
        )?);
        let mut notes = Vec::new();
        let n = self.nw;
        let grid: Vec<f64> =
            (0..n).map(|i| self.simag + (self.sibry - self.simag) * i as f64 / (n - 1) as f64).collect();
        let (psi_samples, f_samples) = if self.sibry > self.simag {
            (grid, self.fpol.clone())
        } else if self.sibry < self.simag {
            notes.push("flux decreases from axis to boundary; profile samples reversed".to_string());
            (grid.into_iter().rev().collect(), self.fpol.iter().rev().copied().collect())
        } else {
            notes.push("simag equals sibry; profile collapsed to its axis value".to_string());
            (vec![self.simag], vec![self.fpol[0]])
        };
        let profile = Profile1D::new(psi_samples, f_samples)?;
        let (lo, hi) = (profile.psi_samples()[0], *profile.psi_samples().last().unwrap());
        let clamped = self.psirz.iter().filter(|&&p| p < lo || p > hi).count();
        if clamped > 0 {
            notes.push(format!("{clamped} grid values outside [{lo}, {hi}] use clamped f"));
        }
        let cg = build_space(&mesh, SpaceKind::CG1);
        let psi = Field::new(cg.clone(), self.psirz.clone())?;
        let f = Field::new(cg, self.psirz.iter().map(|&p| profile.eval(p)).collect())?;
        Ok(EquilibriumInput { mesh, psi, f, psi_sep: self.sibry, psi_axis: self.simag, profile: Some(profile), notes })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn synthetic(nw: usize, nh: usize, psi: impl Fn(f64, f64) -> f64, fpol: f64) -> Geqdsk {
        let (rleft, rdim, zmid, zdim) = (1.0, 1.0, 0.0, 1.0);
        let mut psirz = Vec::new();
        for j in 0..nh {
            let z = zmid - 0.5 * zdim + zdim * j as f64 / (nh - 1) as f64;
            for i in 0..nw {
                psirz.push(psi(rleft + rdim * i as f64 / (nw - 1) as f64, z));
            }
        }
        Geqdsk {
            description: "synthetic".into(),
            idum: 3,
            nw,
            nh,
            rdim,
            zdim,
            rcentr: 1.5,
            rleft,
            zmid,
            rmaxis: 1.5,
            zmaxis: 0.0,
            simag: 0.0,
            sibry: 1.0,
            bcentr: 1.0,
            current: 1.0e6,
            fpol: vec![fpol; nw],
            pres: vec![0.0; nw],
            ffprim: vec![0.0; nw],
            pprime: vec![0.0; nw],
            psirz,
            qpsi: vec![1.0; nw],
            boundary: vec![[1.2, 0.0], [1.5, 0.3]],
            limiter: vec![[1.0, -0.5]],
        }
    }

    #[test]
    fn fortran_real_format() {
        assert_eq!(e16_9(1.0), " 0.100000000E+01");
        assert_eq!(e16_9(-0.015625), "-0.156250000E-01");
        assert_eq!(e16_9(0.0), " 0.000000000E+00");
        assert_eq!(e16_9(123456789.0), " 0.123456789E+09");
    }

    #[test]
    fn touching_fields_are_split() {
        assert_eq!(tokens(" 0.1E+01-0.2E-01 0.3e+00"), vec!["0.1E+01", "-0.2E-01", "0.3e+00"]);
    }

    #[test]
    fn constant_fixture() {
        let g = synthetic(3, 3, |_, _| 0.0, 1.0);
        let eq = parse_geqdsk(&g.to_text()).unwrap().to_equilibrium().unwrap();
        assert!(eq.psi.coeffs.iter().all(|&x| x == 0.0));
        assert!(eq.f.coeffs.iter().all(|&x| x == 1.0));
        assert_eq!(eq.psi_sep, 1.0);
    }

    #[test]
    fn nodal_identity_and_round_trip() {
        let g = synthetic(5, 5, |r, _| r * r, 2.0);
        let text = g.to_text();
        let back = parse_geqdsk(&text).unwrap();
        assert_eq!(back, g);
        assert_eq!(back.to_text(), text);
        let eq = back.to_equilibrium().unwrap();
        for (p, v) in eq.mesh.vertices().iter().zip(&eq.psi.coeffs) {
            assert_eq!(*v, p.r * p.r);
        }
    }

    #[test]
    fn profile_clamps_below_axis() {
        let mut g = synthetic(3, 3, |_, _| -1.0, 1.0);
        g.fpol = vec![4.0, 5.0, 6.0];
        let eq = g.to_equilibrium().unwrap();
        assert!(eq.f.coeffs.iter().all(|&x| x == 4.0));
        assert_eq!(eq.notes.len(), 1);
    }

    #[test]
    fn reversed_flux_direction() {
        let mut g = synthetic(3, 3, |_, _| 0.5, 1.0);
        g.simag = 1.0;
        g.sibry = 0.0;
        g.fpol = vec![4.0, 5.0, 6.0];
        let eq = g.to_equilibrium().unwrap();
        assert!(eq.f.coeffs.iter().all(|&x| x == 5.0));
        assert!(eq.notes[0].contains("reversed"));
    }

    #[test]
    fn rejects_small_grid_and_truncation() {
        let g = synthetic(3, 3, |_, _| 0.0, 1.0);
        let text = g.to_text().replacen("   3   3   3", "   3   1   3", 1);
        assert!(parse_geqdsk(&text).is_err());
        let full = g.to_text();
        assert!(parse_geqdsk(&full[..full.len() / 2]).is_err());
    }
}
