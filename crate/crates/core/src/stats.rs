//! Per-cycle statistics of the actively labeled set.

use std::collections::HashMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::{filter_annotations, FrameRecord};
use crate::pool::PoolState;

/// Annotation filter applied before counting instances.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnotationFilter {
    pub min_height: f64,
    pub ratio_lo: f64,
    pub ratio_hi: f64,
}

impl Default for AnnotationFilter {
    fn default() -> Self {
        AnnotationFilter {
            min_height: 50.0,
            ratio_lo: 0.2,
            ratio_hi: 0.65,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CycleStats {
    pub cycle: u32,
    pub frames: usize,
    pub instances: usize,
    pub frames_with_instances: usize,
    pub cumulative_frames: usize,
    pub cumulative_instances: usize,
    pub cumulative_frames_with_instances: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionStats {
    pub cycles: Vec<CycleStats>,
}

impl SelectionStats {
    pub fn total(&self) -> CycleStats {
        self.cycles
            .last()
            .map_or_else(CycleStats::default, |c| CycleStats {
                frames: c.cumulative_frames,
                instances: c.cumulative_instances,
                frames_with_instances: c.cumulative_frames_with_instances,
                ..*c
            })
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for row in &self.cycles {
            w.serialize(row)?;
        }
        if self.cycles.is_empty() {
            w.write_record([
                "cycle",
                "frames",
                "instances",
                "frames_with_instances",
                "cumulative_frames",
                "cumulative_instances",
                "cumulative_frames_with_instances",
            ])?;
        }
        w.flush().map_err(|e| crate::error::Error::io("<csv>", e))?;
        Ok(())
    }
}

/// Counts frames and (filtered) instances selected in each completed cycle.
/// Frames without annotations contribute zero instances.
pub fn report_statistics(
    pool: &PoolState,
    catalog: &[FrameRecord],
    filter: Option<&AnnotationFilter>,
) -> SelectionStats {
    let instances: HashMap<&str, usize> = catalog
        .iter()
        .map(|f| {
            let boxes = f.annotations.as_deref().unwrap_or(&[]);
            let n = match filter {
                Some(flt) => filter_annotations(boxes, flt.min_height, flt.ratio_lo, flt.ratio_hi).len(),
                None => boxes.len(),
            };
            (f.frame_id.as_str(), n)
        })
        .collect();
    let mut cycles: Vec<CycleStats> = (0..pool.cycle_index)
        .map(|cycle| CycleStats {
            cycle,
            ..Default::default()
        })
        .collect();
    for l in &pool.labeled {
        let n = instances.get(l.frame_id.as_str()).copied().unwrap_or(0);
        if let Some(row) = cycles.get_mut(l.cycle as usize) {
            row.frames += 1;
            row.instances += n;
            row.frames_with_instances += usize::from(n > 0);
        }
    }
    let mut acc = CycleStats::default();
    for row in &mut cycles {
        acc.frames += row.frames;
        acc.instances += row.instances;
        acc.frames_with_instances += row.frames_with_instances;
        row.cumulative_frames = acc.frames;
        row.cumulative_instances = acc.instances;
        row.cumulative_frames_with_instances = acc.frames_with_instances;
    }
    SelectionStats { cycles }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::BoundingBox;
    use crate::pool::LabeledFrame;

    fn frame(id: &str, boxes: usize) -> FrameRecord {
        let mut f = FrameRecord::still(id);
        f.annotations = Some(
            (0..boxes)
                .map(|_| BoundingBox::new(0.0, 0.0, 30.0, 100.0, "pedestrian").unwrap())
                .collect(),
        );
        f
    }

    #[test]
    fn counts_instances() {
        let catalog = vec![
            frame("a", 2),
            frame("b", 0),
            frame("c", 5),
            FrameRecord::still("d"),
        ];
        let mut pool = PoolState::new(["d"], 0);
        pool.cycle_index = 1;
        for id in ["a", "b", "c"] {
            pool.labeled.push(LabeledFrame {
                cycle: 0,
                frame_id: id.into(),
            });
        }
        let stats = report_statistics(&pool, &catalog, Some(&AnnotationFilter::default()));
        let t = stats.total();
        assert_eq!((t.frames, t.instances, t.frames_with_instances), (3, 7, 2));
    }

    #[test]
    fn empty_selection_is_all_zero() {
        let pool = PoolState::new(["a"], 0);
        let stats = report_statistics(&pool, &[frame("a", 3)], None);
        assert_eq!(stats.total(), CycleStats::default());
        let mut buf = Vec::new();
        stats.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("cycle,frames"));
    }

    #[test]
    fn filter_applies_before_counting() {
        let mut small = FrameRecord::still("s");
        small.annotations = Some(vec![BoundingBox::new(0.0, 0.0, 10.0, 40.0, "pedestrian").unwrap()]);
        let mut pool = PoolState::new(Vec::<String>::new(), 0);
        pool.cycle_index = 1;
        pool.labeled.push(LabeledFrame {
            cycle: 0,
            frame_id: "s".into(),
        });
        let catalog = vec![small];
        assert_eq!(report_statistics(&pool, &catalog, None).total().instances, 1);
        assert_eq!(
            report_statistics(&pool, &catalog, Some(&AnnotationFilter::default()))
                .total()
                .instances,
            0
        );
    }
}
