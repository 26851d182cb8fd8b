use std::path::Path;

use crate::output::write_atomic;

pub struct Plot {
    pub name: String,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

#[derive(Default)]
pub struct PlotSet(pub Vec<Plot>);

impl PlotSet {
    pub fn write(&self, dir: &Path) -> anyhow::Result<Vec<String>> {
        let mut names = Vec::new();
        for p in &self.0 {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(&p.header)?;
            for r in &p.rows {
                w.write_record(r)?;
            }
            let bytes = w.into_inner().map_err(|e| anyhow::anyhow!("csv: {e}"))?;
            write_atomic(&dir.join(&p.name), &bytes)?;
            names.push(p.name.clone());
        }
        Ok(names)
    }
}
