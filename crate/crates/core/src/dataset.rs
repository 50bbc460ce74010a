//! Case-control genotype datasets and predictor-subset masks.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::sync::OnceLock;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// A bitset over the `p` candidate SNP predictors identifying one submodel.
///
/// The intercept and all forced covariates are implicitly always included, so
/// a mask only records which SNP columns enter the linear predictor.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ModelMask {
    bits: u32,
    width: u8,
}

impl ModelMask {
    /// Mask with no SNPs included (intercept + covariates only).
    pub fn empty(p: usize) -> Self {
        assert!(p <= 32, "mask width exceeds 32 bits");
        ModelMask { bits: 0, width: p as u8 }
    }

    /// Mask with all `p` SNPs included.
    pub fn full(p: usize) -> Self {
        assert!(p <= 32, "mask width exceeds 32 bits");
        let bits = if p == 32 { u32::MAX } else { (1u32 << p) - 1 };
        ModelMask { bits, width: p as u8 }
    }

    pub fn from_bits(bits: u32, p: usize) -> Self {
        let mut m = Self::empty(p);
        assert!(p == 32 || bits < (1u32 << p), "bits exceed mask width");
        m.bits = bits;
        m
    }

    pub fn from_indices(p: usize, indices: &[usize]) -> Result<Self> {
        let mut m = Self::empty(p);
        for &j in indices {
            if j >= p {
                return Err(Error::DimensionMismatch(format!(
                    "predictor index {j} out of range for p = {p}"
                )));
            }
            m.bits |= 1 << j;
        }
        Ok(m)
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn width(&self) -> usize {
        self.width as usize
    }

    pub fn contains(&self, j: usize) -> bool {
        j < self.width() && self.bits & (1 << j) != 0
    }

    pub fn with(&self, j: usize) -> Self {
        assert!(j < self.width());
        ModelMask { bits: self.bits | (1 << j), width: self.width }
    }

    pub fn without(&self, j: usize) -> Self {
        assert!(j < self.width());
        ModelMask { bits: self.bits & !(1 << j), width: self.width }
    }

    /// Number of SNPs included in the submodel.
    pub fn popcount(&self) -> usize {
        self.bits.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.bits == 0
    }

    pub fn is_subset_of(&self, other: &ModelMask) -> bool {
        self.width == other.width && self.bits & !other.bits == 0
    }

    /// Number of predictors on which the two masks differ.
    pub fn hamming(&self, other: &ModelMask) -> usize {
        assert_eq!(self.width, other.width, "mask widths differ");
        (self.bits ^ other.bits).count_ones() as usize
    }

    /// Included predictor indices in ascending order.
    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        let bits = self.bits;
        (0..self.width()).filter(move |j| bits & (1 << j) != 0)
    }
}

impl fmt::Debug for ModelMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ModelMask({:?}, width {})", self.indices().collect::<Vec<_>>(), self.width)
    }
}

impl fmt::Display for ModelMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let idx: Vec<String> = self.indices().map(|j| j.to_string()).collect();
        write!(f, "{{{}}}", idx.join(","))
    }
}

/// Dense column-major design matrix shared by all fits on one dataset.
///
/// Column 0 is the intercept, columns `1..=p` the SNP codes, and columns
/// `p+1..p+1+q` the forced covariates.
pub(crate) struct Design {
    pub n: usize,
    pub p: usize,
    pub q: usize,
    cols: Vec<f64>,
    pub y: Vec<f64>,
}

impl Design {
    fn build(data: &GenotypeDataset) -> Design {
        let (n, p, q) = (data.n, data.p, data.q);
        let n_cols = 1 + p + q;
        let mut cols = vec![0.0; n * n_cols];
        cols[..n].fill(1.0);
        for j in 0..p {
            let col = &mut cols[(1 + j) * n..(2 + j) * n];
            for i in 0..n {
                col[i] = data.x[i * p + j] as f64;
            }
        }
        for k in 0..q {
            let col = &mut cols[(1 + p + k) * n..(2 + p + k) * n];
            for i in 0..n {
                col[i] = data.z[i * q + k];
            }
        }
        let y = data.y.iter().map(|&v| v as f64).collect();
        Design { n, p, q, cols, y }
    }

    #[inline]
    pub fn col(&self, c: usize) -> &[f64] {
        &self.cols[c * self.n..(c + 1) * self.n]
    }

    /// Active column indices for a mask: intercept, included SNPs, covariates.
    pub fn active_columns(&self, mask: &ModelMask) -> Vec<usize> {
        let mut active = Vec::with_capacity(1 + mask.popcount() + self.q);
        active.push(0);
        active.extend(mask.indices().map(|j| 1 + j));
        active.extend(self.p + 1..self.p + 1 + self.q);
        active
    }
}

/// Binary phenotype, coded SNP matrix, and always-included covariates.
///
/// SNP genotypes use additive coding: `AA -> 0`, `Aa -> 1`, `aa -> 2`.
pub struct GenotypeDataset {
    n: usize,
    p: usize,
    q: usize,
    y: Vec<u8>,
    x: Vec<u8>,
    z: Vec<f64>,
    snp_names: Vec<String>,
    covariate_names: Vec<String>,
    design: OnceLock<Design>,
}

impl fmt::Debug for GenotypeDataset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GenotypeDataset")
            .field("n", &self.n)
            .field("p", &self.p)
            .field("q", &self.q)
            .finish_non_exhaustive()
    }
}

impl GenotypeDataset {
    /// Validates all invariants: `y` binary, `x` codes in `{0, 1, 2}`,
    /// `n > p + q + 1`, and consistent dimensions.
    pub fn new(
        y: Vec<u8>,
        x: Vec<u8>,
        z: Vec<f64>,
        snp_names: Vec<String>,
        covariate_names: Vec<String>,
    ) -> Result<Self> {
        let n = y.len();
        let p = snp_names.len();
        let q = covariate_names.len();
        if n == 0 {
            return Err(Error::InvalidDataset("no subjects".into()));
        }
        if x.len() != n * p {
            return Err(Error::DimensionMismatch(format!(
                "x has {} entries, expected n*p = {}",
                x.len(),
                n * p
            )));
        }
        if z.len() != n * q {
            return Err(Error::DimensionMismatch(format!(
                "z has {} entries, expected n*q = {}",
                z.len(),
                n * q
            )));
        }
        if n <= p + q + 1 {
            return Err(Error::InvalidDataset(format!(
                "n = {n} must exceed p + q + 1 = {}",
                p + q + 1
            )));
        }
        if let Some(bad) = y.iter().find(|&&v| v > 1) {
            return Err(Error::InvalidDataset(format!("phenotype value {bad} is not 0/1")));
        }
        if let Some(bad) = x.iter().find(|&&v| v > 2) {
            return Err(Error::InvalidDataset(format!("genotype code {bad} is not in {{0,1,2}}")));
        }
        if z.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidDataset("covariate value is not finite".into()));
        }
        Ok(GenotypeDataset {
            n,
            p,
            q,
            y,
            x,
            z,
            snp_names,
            covariate_names,
            design: OnceLock::new(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn response(&self, i: usize) -> u8 {
        self.y[i]
    }

    pub fn responses(&self) -> &[u8] {
        &self.y
    }

    /// Genotype code of subject `i` at SNP `j`.
    pub fn genotype(&self, i: usize, j: usize) -> u8 {
        self.x[i * self.p + j]
    }

    pub fn covariate(&self, i: usize, k: usize) -> f64 {
        self.z[i * self.q + k]
    }

    pub fn snp_names(&self) -> &[String] {
        &self.snp_names
    }

    pub fn covariate_names(&self) -> &[String] {
        &self.covariate_names
    }

    pub(crate) fn design(&self) -> &Design {
        self.design.get_or_init(|| Design::build(self))
    }

    /// SHA-256 over a canonical byte encoding of dimensions, responses,
    /// genotype codes, covariates and column names.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        for dim in [self.n, self.p, self.q] {
            hasher.update((dim as u64).to_le_bytes());
        }
        hasher.update(&self.y);
        hasher.update(&self.x);
        for v in &self.z {
            hasher.update(v.to_le_bytes());
        }
        for name in self.snp_names.iter().chain(&self.covariate_names) {
            hasher.update(name.as_bytes());
            hasher.update([0u8]);
        }
        let digest = hasher.finalize();
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Writes the dataset in the CSV interchange format
    /// (`id,phenotype,<covariate...>,<snp...>`).
    ///
    /// Covariates are written with shortest round-trip formatting so a
    /// write/load cycle reproduces the matrices bit for bit.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        let mut header = vec!["id".to_string(), "phenotype".to_string()];
        header.extend(self.covariate_names.iter().cloned());
        header.extend(self.snp_names.iter().cloned());
        wtr.write_record(&header)?;
        for i in 0..self.n {
            let mut record = Vec::with_capacity(2 + self.q + self.p);
            record.push((i + 1).to_string());
            record.push(self.y[i].to_string());
            for k in 0..self.q {
                record.push(format!("{}", self.covariate(i, k)));
            }
            for j in 0..self.p {
                record.push(self.genotype(i, j).to_string());
            }
            wtr.write_record(&record)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn write_csv_path<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

/// Declares which header columns hold forced covariates; every remaining
/// column after `id` and `phenotype` is treated as a SNP.
#[derive(Debug, Clone, Default)]
pub struct FormatConfig {
    pub covariate_columns: Vec<String>,
}

/// A parsed dataset plus the count of rows rejected for missing cells.
#[derive(Debug)]
pub struct LoadedDataset {
    pub dataset: GenotypeDataset,
    pub rows_rejected: usize,
}

fn parse_genotype(cell: &str, line: usize) -> Result<u8> {
    match cell {
        "0" => return Ok(0),
        "1" => return Ok(1),
        "2" => return Ok(2),
        _ => {}
    }
    // Allele labels: uppercase is the reference allele, code counts the
    // variant copies. `Aa` and `aA` are the same heterozygote.
    let chars: Vec<char> = cell.chars().collect();
    if chars.len() == 2 && chars.iter().all(|c| *c == 'A' || *c == 'a') {
        return Ok(chars.iter().filter(|c| **c == 'a').count() as u8);
    }
    Err(Error::InvalidGenotype { line, value: cell.to_string() })
}

/// Parses the CSV interchange format. Rows with any missing cell are
/// dropped and counted in `rows_rejected` rather than aborting the load.
pub fn load_dataset<R: Read>(reader: R, format: &FormatConfig) -> Result<LoadedDataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| Error::Parse { line: 1, column: 1, message: e.to_string() })?
        .clone();
    let fields: Vec<&str> = header.iter().collect();
    if fields.len() < 2 || fields[0] != "id" || fields[1] != "phenotype" {
        return Err(Error::Parse {
            line: 1,
            column: 1,
            message: "header must start with 'id,phenotype'".into(),
        });
    }
    let mut covariate_cols = Vec::new();
    let mut snp_cols = Vec::new();
    for (idx, name) in fields.iter().enumerate().skip(2) {
        if format.covariate_columns.iter().any(|c| c == name) {
            covariate_cols.push((idx, name.to_string()));
        } else {
            snp_cols.push((idx, name.to_string()));
        }
    }
    for wanted in &format.covariate_columns {
        if !covariate_cols.iter().any(|(_, name)| name == wanted) {
            return Err(Error::Parse {
                line: 1,
                column: 1,
                message: format!("covariate column '{wanted}' not found in header"),
            });
        }
    }

    let q = covariate_cols.len();
    let p = snp_cols.len();
    let mut y = Vec::new();
    let mut x = Vec::new();
    let mut z = Vec::new();
    let mut rows_rejected = 0usize;

    for (row_idx, record) in rdr.records().enumerate() {
        let line = row_idx + 2;
        let record = record.map_err(|e| Error::Parse { line, column: 1, message: e.to_string() })?;
        if record.len() != fields.len() {
            return Err(Error::Parse {
                line,
                column: 1,
                message: format!("expected {} fields, found {}", fields.len(), record.len()),
            });
        }
        if record.iter().any(|cell| cell.trim().is_empty()) {
            rows_rejected += 1;
            continue;
        }
        let pheno = record.get(1).unwrap().trim();
        let yi = match pheno {
            "0" => 0u8,
            "1" => 1u8,
            other => {
                return Err(Error::Parse {
                    line,
                    column: 2,
                    message: format!("phenotype '{other}' is not 0/1"),
                })
            }
        };
        let mut zr = Vec::with_capacity(q);
        for &(col, ref name) in &covariate_cols {
            let cell = record.get(col).unwrap().trim();
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                line,
                column: col + 1,
                message: format!("covariate '{name}' value '{cell}' is not numeric"),
            })?;
            zr.push(v);
        }
        let mut xr = Vec::with_capacity(p);
        for &(col, _) in &snp_cols {
            let cell = record.get(col).unwrap().trim();
            xr.push(parse_genotype(cell, line)?);
        }
        y.push(yi);
        x.extend(xr);
        z.extend(zr);
    }

    let snp_names = snp_cols.into_iter().map(|(_, name)| name).collect();
    let covariate_names = covariate_cols.into_iter().map(|(_, name)| name).collect();
    let dataset = GenotypeDataset::new(y, x, z, snp_names, covariate_names)?;
    Ok(LoadedDataset { dataset, rows_rejected })
}

pub fn load_dataset_path<P: AsRef<Path>>(path: P, format: &FormatConfig) -> Result<LoadedDataset> {
    let file = std::fs::File::open(path)?;
    load_dataset(std::io::BufReader::new(file), format)
}
