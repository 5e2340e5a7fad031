use crate::error::{Error, Result};
use crate::party::Party;
use crate::primitives::AShare;

impl Party {
    /// Row-wise maximum by a comparison tournament; every level is one
    /// batched comparison plus one batched MUX over all rows.
    pub fn max_rows(&mut self, x: &AShare) -> Result<AShare> {
        if x.cols == 0 {
            return Err(Error::Shape("max over empty rows".into()));
        }
        let cfg = self.cfg();
        let rows = x.rows;
        let mut cur: Vec<Vec<u64>> = (0..rows)
            .map(|r| x.data[r * x.cols..(r + 1) * x.cols].to_vec())
            .collect();
        let mut width = x.cols;
        while width > 1 {
            let pairs = width / 2;
            let (mut diff, mut base) = (Vec::with_capacity(rows * pairs), Vec::with_capacity(rows * pairs));
            for row in &cur {
                for p in 0..pairs {
                    diff.push(cfg.sub(row[2 * p], row[2 * p + 1]));
                    base.push(row[2 * p + 1]);
                }
            }
            let diff = AShare::vector(self.id(), diff);
            let c = self.gt_scalar(&diff, 0)?;
            let sel = self.mux(&c, &diff)?;
            for (r, row) in cur.iter_mut().enumerate() {
                let mut next: Vec<u64> = (0..pairs)
                    .map(|p| cfg.add(base[r * pairs + p], sel.data[r * pairs + p]))
                    .collect();
                if width % 2 == 1 {
                    next.push(row[width - 1]);
                }
                *row = next;
            }
            width = pairs + width % 2;
        }
        AShare::matrix(self.id(), rows, 1, cur.into_iter().map(|r| r[0]).collect())
    }

    pub fn max(&mut self, x: &AShare) -> Result<AShare> {
        let row = x.clone().reshape(1, x.len())?;
        self.max_rows(&row)
    }
}
