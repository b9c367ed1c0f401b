use crate::data::{AttributeSchema, AttributedDataset, ExampleRecord, Payload};
use crate::sprites::sprites_schema;

/// Sprite-schema dataset with `per_cell` path-payload records in every cell.
pub(crate) fn grid(per_cell: usize) -> AttributedDataset {
    grid_with(sprites_schema(), |_, _| per_cell)
}

/// Two-attribute dataset with `count(label, nuisance)` records per cell.
pub(crate) fn grid_with(schema: AttributeSchema, count: impl Fn(u32, u32) -> usize) -> AttributedDataset {
    let mut records = Vec::new();
    let mut id = 1000;
    for l in 0..schema.num_labels() as u32 {
        for a in 0..schema.num_nuisance() as u32 {
            for _ in 0..count(l, a) {
                let mut attr = vec![0; 2];
                attr[schema.label_index] = l;
                attr[schema.nuisance_index] = a;
                records.push(ExampleRecord {
                    sample_id: id,
                    attr,
                    payload: Payload::Path(String::new()),
                });
                id += 1;
            }
        }
    }
    AttributedDataset::new(schema, records).unwrap()
}
