//! Ground-truth thirds and intersection-over-foreground on a COCO-style
//! annotation, drawn as text.

use odsg::evaluation::{binarize, iof, rasterize_polygons, split_thirds, BinarizeConfig, CocoDataset};
use odsg::SaliencyMap;

const ANNOTATIONS: &str = r#"{
  "images": [{"id": 1, "file_name": "l.png", "width": 24, "height": 16}],
  "annotations": [{
    "id": 10, "image_id": 1, "category_id": 0, "iscrowd": 0,
    "segmentation": [[3, 2, 9, 2, 9, 10, 21, 10, 21, 14, 3, 14]],
    "bbox": [3, 2, 18, 12]
  }],
  "categories": [{"id": 0, "name": "ell"}]
}"#;

fn main() -> odsg::Result<()> {
    let ds = CocoDataset::from_json(ANNOTATIONS)?;
    let gt = &ds.ground_truth()?[&1][0];
    let (h, w) = (16, 24);
    let mask = rasterize_polygons(gt, h, w)?;
    let thirds = split_thirds(&mask, &gt.bbox)?;

    println!("vertical thirds of the instance (L / M / R):");
    for r in 0..h {
        let line: String = (0..w)
            .map(|c| match (thirds.left.get(r, c), thirds.mid_x.get(r, c), thirds.right.get(r, c)) {
                (true, _, _) => 'L',
                (_, true, _) => 'M',
                (_, _, true) => 'R',
                _ => '.',
            })
            .collect();
        println!("  {line}");
    }

    // a map peaked on the left edge of the shape, as an xmin map should be
    let values = (0..h * w)
        .map(|i| {
            let (r, c) = ((i / w) as f64, (i % w) as f64);
            (-((c - 3.5).powi(2) / 4.0 + (r - 8.0).powi(2) / 30.0)).exp()
        })
        .collect();
    let map = SaliencyMap::new(h, w, values)?;
    let fg = binarize(&map, &BinarizeConfig::default()).mask;
    println!("saliency mask: {} px", fg.count());
    println!("iof left  {:.3}", iof(&fg, &thirds.left)?);
    println!("iof mid_x {:.3}", iof(&fg, &thirds.mid_x)?);
    println!("iof right {:.3}", iof(&fg, &thirds.right)?);
    Ok(())
}
