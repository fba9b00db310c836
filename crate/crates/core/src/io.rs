//! File formats: model and table JSON, transactions and prices CSV, and
//! graph edge lists.

use std::collections::BTreeMap;
use std::io::{BufRead, Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Result, SsmError};
use crate::itemset::{ItemSet, ProductId, ProductUniverse, OUTSIDE};
use crate::model::StochasticSetModel;
use crate::table::ChoiceProbabilityTable;

/// Significant digits of every number the command line prints.
pub const OUTPUT_DIGITS: usize = 12;

/// Row-sum slack accepted when reading tables.
pub const TABLE_READ_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupportEntry {
    pub set: ItemSet,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub n: usize,
    pub support: Vec<SupportEntry>,
}

impl ModelFile {
    pub fn from_model(model: &StochasticSetModel<f64>) -> Self {
        Self {
            n: model.universe().n(),
            support: model.support().iter().map(|&(set, weight)| SupportEntry { set, weight }).collect(),
        }
    }

    pub fn into_model(self) -> Result<StochasticSetModel<f64>> {
        let universe = ProductUniverse::new(self.n).map_err(input)?;
        StochasticSetModel::new(universe, self.support.into_iter().map(|e| (e.set, e.weight))).map_err(input)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    #[serde(rename = "S")]
    pub assortment: ItemSet,
    /// Keyed by product id as a string; `"0"` is the outside option.
    pub probs: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableFile {
    pub n: usize,
    pub rows: Vec<TableRow>,
}

impl TableFile {
    /// Rows present in the table, ascending mask order.
    pub fn from_table(table: &ChoiceProbabilityTable<f64>) -> Self {
        let rows = table
            .universe()
            .subsets()
            .filter_map(|s| {
                table.row(s).map(|row| TableRow {
                    assortment: s,
                    probs: row.into_iter().map(|(j, p)| (j.to_string(), p)).collect(),
                })
            })
            .collect();
        Self { n: table.universe().n(), rows }
    }

    pub fn into_table(self) -> Result<ChoiceProbabilityTable<f64>> {
        let universe = ProductUniverse::new(self.n).map_err(input)?;
        let mut table = ChoiceProbabilityTable::empty(universe)?;
        for (k, row) in self.rows.into_iter().enumerate() {
            let context = |msg: String| SsmError::Input(format!("row {}: {msg}", k + 1));
            universe.check_set(row.assortment).map_err(|e| context(e.to_string()))?;
            if table.has_row(row.assortment) {
                return Err(context(format!("duplicate row for {}", row.assortment)));
            }
            let entries = row
                .probs
                .into_iter()
                .map(|(key, p)| {
                    key.parse::<ProductId>()
                        .map(|j| (j, p))
                        .map_err(|_| context(format!("probability key {key:?} is not a product id")))
                })
                .collect::<Result<Vec<_>>>()?;
            if let Some(&(j, _)) = entries.iter().find(|e| e.0 != OUTSIDE && e.0 > universe.n()) {
                return Err(context(format!("product {j} outside universe")));
            }
            table.set_row(row.assortment, &entries, TABLE_READ_TOL).map_err(|e| context(e.to_string()))?;
        }
        Ok(table)
    }
}

fn input(e: SsmError) -> SsmError {
    match e {
        SsmError::Domain(m) => SsmError::Input(m),
        other => other,
    }
}

pub fn read_model<R: Read>(reader: R) -> Result<StochasticSetModel<f64>> {
    let file: ModelFile = serde_json::from_reader(reader)?;
    file.into_model()
}

pub fn write_model<W: Write>(mut writer: W, model: &StochasticSetModel<f64>) -> Result<()> {
    serde_json::to_writer_pretty(&mut writer, &ModelFile::from_model(model))?;
    writeln!(writer)?;
    Ok(())
}

pub fn read_table<R: Read>(reader: R) -> Result<ChoiceProbabilityTable<f64>> {
    let file: TableFile = serde_json::from_reader(reader)?;
    file.into_table()
}

pub fn write_table<W: Write>(mut writer: W, table: &ChoiceProbabilityTable<f64>) -> Result<()> {
    serde_json::to_writer_pretty(&mut writer, &TableFile::from_table(table))?;
    writeln!(writer)?;
    Ok(())
}

fn parse_ids(field: &str) -> std::result::Result<Vec<ProductId>, String> {
    if field.trim().is_empty() {
        return Ok(Vec::new());
    }
    field
        .split(';')
        .map(|t| t.trim().parse::<ProductId>().map_err(|_| format!("{t:?} is not a product id")))
        .collect()
}

fn check_header(headers: &csv::StringRecord, expected: &[&str]) -> Result<()> {
    let got: Vec<&str> = headers.iter().map(str::trim).collect();
    if got != expected {
        return Err(SsmError::Record { line: 1, message: format!("expected header {}, got {}", expected.join(","), got.join(",")) });
    }
    Ok(())
}

fn csv_reader<R: Read>(reader: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader)
}

fn csv_error(e: csv::Error) -> SsmError {
    let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
    SsmError::Record { line, message: e.to_string() }
}

/// Reads `assortment,choice` rows. Assortments are `;`-joined ids; the
/// choice is an offered id or `0`. Record errors carry the file line.
pub fn read_transactions<R: Read>(reader: R) -> Result<Vec<(ItemSet, ProductId)>> {
    let mut rdr = csv_reader(reader);
    check_header(rdr.headers().map_err(csv_error)?, &["assortment", "choice"])?;
    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        let fail = |message: String| SsmError::Record { line, message };
        let ids = parse_ids(&record[0]).map_err(fail)?;
        let assortment = ItemSet::from_ids(ids).map_err(|e| fail(e.to_string()))?;
        let choice: ProductId = record[1].parse().map_err(|_| fail(format!("{:?} is not a product id", &record[1])))?;
        if choice != OUTSIDE && !assortment.contains(choice) {
            return Err(fail(format!("choice {choice} is not offered in {assortment}")));
        }
        out.push((assortment, choice));
    }
    Ok(out)
}

/// Smallest universe holding every id in the records (at least one product).
pub fn infer_universe(records: &[(ItemSet, ProductId)]) -> Result<ProductUniverse> {
    let mask = records.iter().fold(0u64, |m, r| m | r.0.mask());
    ProductUniverse::new((64 - mask.leading_zeros() as usize).max(1))
}

pub fn write_transactions<W: Write>(writer: W, records: &[(ItemSet, ProductId)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["assortment", "choice"]).map_err(csv_error)?;
    for (s, i) in records {
        let ids: Vec<String> = s.iter().map(|k| k.to_string()).collect();
        w.write_record([ids.join(";"), i.to_string()]).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads `id,price` rows.
pub fn read_prices<R: Read>(reader: R) -> Result<Vec<(ProductId, f64)>> {
    let mut rdr = csv_reader(reader);
    check_header(rdr.headers().map_err(csv_error)?, &["id", "price"])?;
    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        let fail = |message: String| SsmError::Record { line, message };
        let id: ProductId = record[0].parse().map_err(|_| fail(format!("{:?} is not a product id", &record[0])))?;
        let price: f64 = record[1].parse().map_err(|_| fail(format!("{:?} is not a number", &record[1])))?;
        out.push((id, price));
    }
    Ok(out)
}

pub fn write_prices<W: Write>(writer: W, prices: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["id", "price"]).map_err(csv_error)?;
    for (k, r) in prices.iter().enumerate() {
        w.write_record([(k + 1).to_string(), r.to_string()]).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads `u v` per line; blank lines and `#` comments are skipped. Returns
/// the edges and the largest vertex id seen.
pub fn read_edge_list<R: BufRead>(reader: R) -> Result<(Vec<(usize, usize)>, usize)> {
    let mut edges = Vec::new();
    let mut max_vertex = 0;
    for (k, line) in reader.lines().enumerate() {
        let line = line?;
        let text = line.split('#').next().unwrap_or("").trim();
        if text.is_empty() {
            continue;
        }
        let fail = |message: String| SsmError::Record { line: k + 1, message };
        let parts: Vec<&str> = text.split_whitespace().collect();
        if parts.len() != 2 {
            return Err(fail(format!("expected two vertex ids, got {text:?}")));
        }
        let parse = |t: &str| t.parse::<usize>().map_err(|_| fail(format!("{t:?} is not a vertex id")));
        let (u, v) = (parse(parts[0])?, parse(parts[1])?);
        max_vertex = max_vertex.max(u).max(v);
        edges.push((u, v));
    }
    Ok((edges, max_vertex))
}

pub fn write_edge_list<W: Write>(mut writer: W, edges: &[(usize, usize)]) -> Result<()> {
    for (u, v) in edges {
        writeln!(writer, "{u} {v}")?;
    }
    Ok(())
}

/// `x` rounded to `digits` significant digits.
pub fn round_sig(x: f64, digits: usize) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", digits.saturating_sub(1), x).parse().unwrap_or(x)
}

/// Rounds every float in a JSON document to [`OUTPUT_DIGITS`].
pub fn round_json(value: &mut serde_json::Value) {
    match value {
        serde_json::Value::Number(num) if num.is_f64() => {
            if let Some(rounded) = num.as_f64().map(|x| round_sig(x, OUTPUT_DIGITS)).and_then(serde_json::Number::from_f64) {
                *num = rounded;
            }
        }
        serde_json::Value::Array(items) => items.iter_mut().for_each(round_json),
        serde_json::Value::Object(map) => map.values_mut().for_each(round_json),
        _ => {}
    }
}
