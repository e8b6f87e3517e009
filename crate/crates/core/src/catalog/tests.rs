use super::*;
use crate::curation::extract_crop;
use crate::geometry::BoundingBox;
use image::Rgba;

fn artwork(id: &str) -> Artwork {
    Artwork {
        id: id.into(),
        title: format!("Title {id}"),
        artist: "Unknown".into(),
        production_year: None,
        technique: String::new(),
        image_ref: format!("{id}.png"),
        image_width: Some(64),
        image_height: Some(64),
        palette: None,
    }
}

fn det(t: &Taxonomy, artwork: &str, label: &str, x: f64, conf: f64) -> Detection {
    Detection::new(artwork, label, BoundingBox::new(x, 0.0, x + 40.0, 40.0).unwrap(), conf, t).unwrap()
}

fn image() -> RgbaImage {
    RgbaImage::from_fn(64, 64, |x, y| Rgba([x as u8 * 3, y as u8 * 3, 9, 255]))
}

fn open(dir: &Path) -> Catalog {
    Catalog::open(dir, Arc::new(Taxonomy::default_table()), OpenMode::ReadWrite).unwrap()
}

#[test]
fn idempotent_and_conflicting_writes() {
    let dir = tempfile::tempdir().unwrap();
    let c = open(dir.path());
    let a = artwork("a1");
    c.put_artwork(&a).unwrap();
    c.put_artwork(&a).unwrap();
    let mut changed = a.clone();
    changed.title = "Other".into();
    let err = c.put_artwork(&changed).unwrap_err();
    assert!(err.to_string().starts_with("conflicting write"));

    let d = det(c.taxonomy(), "a1", "Skull", 0.0, 0.9);
    c.put_detection(&d).unwrap();
    c.put_detection(&d).unwrap();
    assert_eq!(c.counts().detections, 1);
    let d2 = det(c.taxonomy(), "a1", "Star", 10.0, 0.8);
    c.put_detection(&d2).unwrap();
    assert_eq!(c.detection_ids_by_artwork("a1").len(), 2);
}

#[test]
fn referential_integrity() {
    let dir = tempfile::tempdir().unwrap();
    let c = open(dir.path());
    let t = Taxonomy::default_table();
    let d = det(&t, "ghost", "Skull", 0.0, 0.9);
    assert!(c.put_detection(&d).unwrap_err().to_string().starts_with("dangling reference"));

    c.put_artwork(&artwork("a1")).unwrap();
    let d = det(&t, "a1", "Skull", 0.0, 0.9);
    let crop = extract_crop(&image(), &d, 1).unwrap();
    let err = c.put_crop(&crop).unwrap_err();
    assert!(err.to_string().starts_with("dangling reference"));
    assert!(c.audit().is_clean());
}

#[test]
fn rejects_wrong_category() {
    let dir = tempfile::tempdir().unwrap();
    let c = open(dir.path());
    c.put_artwork(&artwork("a1")).unwrap();
    let mut d = det(c.taxonomy(), "a1", "Bow", 0.0, 0.9);
    assert_eq!(d.category, Category::Weaponry);
    d.category = Category::Interior;
    assert!(matches!(c.put_detection(&d), Err(CatalogError::InvalidRecord { .. })));
}

#[test]
fn crops_round_trip_and_survive_restart() {
    let dir = tempfile::tempdir().unwrap();
    let t = Taxonomy::default_table();
    let d = det(&t, "a1", "Skull", 5.0, 0.9);
    let crop = extract_crop(&image(), &d, 1).unwrap();
    {
        let c = open(dir.path());
        c.put_artwork(&artwork("a1")).unwrap();
        c.put_detection(&d).unwrap();
        let rec = c.put_crop(&crop).unwrap();
        assert_eq!(rec.storage_path, format!("crops/Occultism/{}.png", d.id));
        assert_eq!(c.put_crop(&crop).unwrap(), rec);
        assert_eq!(c.read_crop_pixels(&d.id).unwrap(), crop.pixels);
    }
    let c = open(dir.path());
    assert_eq!(c.counts(), Counts { artworks: 1, detections: 1, crops: 1, generations: 0 });
    assert_eq!(c.query_objects(Some(Category::Occultism), None, None, 10).unwrap().total, 1);
    assert!(c.audit().is_clean());
}

#[test]
fn lock_prevents_second_writer() {
    let dir = tempfile::tempdir().unwrap();
    let c = open(dir.path());
    let t = Arc::new(Taxonomy::default_table());
    assert!(matches!(Catalog::open(dir.path(), t.clone(), OpenMode::ReadWrite), Err(CatalogError::Locked(_))));
    let ro = Catalog::open(dir.path(), t.clone(), OpenMode::ReadOnly).unwrap();
    assert!(matches!(ro.put_artwork(&artwork("x")), Err(CatalogError::ReadOnly)));
    drop(c);
    Catalog::open(dir.path(), t, OpenMode::ReadWrite).unwrap();
}

fn populated(dir: &Path) -> (Catalog, Vec<Detection>) {
    let c = open(dir);
    let img = image();
    let mut dets = Vec::new();
    for i in 0..6 {
        let id = format!("a{i}");
        c.put_artwork(&artwork(&id)).unwrap();
        for (j, label) in ["Skull", "Star", "Skull", "Cat"].iter().enumerate() {
            let d = det(c.taxonomy(), &id, label, j as f64 * 5.0, ((i * 7 + j * 3) % 10) as f64 / 10.0);
            c.put_detection(&d).unwrap();
            if j < 3 {
                c.put_crop(&extract_crop(&img, &d, 1).unwrap()).unwrap();
            }
            dets.push(d);
        }
    }
    (c, dets)
}

#[test]
fn query_filters_and_ordering() {
    let dir = tempfile::tempdir().unwrap();
    let (c, _) = populated(dir.path());
    let skulls = c.query_objects(Some(Category::Occultism), Some("Skull"), None, 100).unwrap();
    assert_eq!(skulls.total, 12);
    assert!(skulls.items.iter().all(|o| o.detection.label == "Skull"));
    let by_label = c.query_objects(None, Some("Skull"), None, 100).unwrap();
    assert_eq!(by_label, skulls);
    let occult = c.query_objects(Some(Category::Occultism), None, None, 100).unwrap();
    assert_eq!(occult.total, 18);
    assert!(occult.items.windows(2).all(|w| RankKey::of(&w[0].detection) < RankKey::of(&w[1].detection)));
    // Cat detections have no crops so are not browsable
    assert_eq!(c.query_objects(Some(Category::Animal), None, None, 10).unwrap().total, 0);
    assert_eq!(c.detection_ids_by_category(Category::Animal).len(), 6);

    assert!(matches!(
        c.query_objects(Some(Category::Animal), Some("Skull"), None, 10),
        Err(CatalogError::LabelCategoryMismatch { .. })
    ));
    assert!(matches!(c.query_objects(None, Some("Unicorn"), None, 10), Err(CatalogError::UnknownLabel(_))));
    assert!(matches!(c.query_objects(None, None, Some("???"), 10), Err(CatalogError::InvalidCursor)));
    assert!(matches!(c.query_objects(None, None, None, 0), Err(CatalogError::InvalidPageSize)));
}

#[test]
fn pagination_partitions() {
    let dir = tempfile::tempdir().unwrap();
    let (c, _) = populated(dir.path());
    let all = c.query_objects(Some(Category::Occultism), None, None, MAX_PAGE_SIZE).unwrap().items;
    for size in 1..=7 {
        let mut got = Vec::new();
        let mut cursor = None;
        loop {
            let page = c.query_objects(Some(Category::Occultism), None, cursor.as_deref(), size).unwrap();
            assert!(page.items.len() <= size);
            assert_eq!(page.total, all.len());
            got.extend(page.items);
            match page.next_cursor {
                Some(next) => cursor = Some(next),
                None => break,
            }
        }
        assert_eq!(got, all, "page size {size}");
    }
}

#[test]
fn painting_detail() {
    let dir = tempfile::tempdir().unwrap();
    let (c, _) = populated(dir.path());
    let detail = c.get_painting_detail("a2").unwrap();
    assert_eq!(detail.detections.len(), 4);
    assert_eq!(detail.detections.iter().filter(|d| d.crop.is_some()).count(), 3);
    c.put_artwork(&artwork("empty")).unwrap();
    assert!(c.get_painting_detail("empty").unwrap().detections.is_empty());
    assert!(matches!(c.get_painting_detail("nope"), Err(CatalogError::UnknownArtwork(_))));
}

#[test]
fn audit_detects_tampering() {
    let dir = tempfile::tempdir().unwrap();
    let (c, dets) = populated(dir.path());
    assert!(c.audit().is_clean());
    let crop = c.crop(&dets[0].id).unwrap();
    let other = RgbaImage::from_pixel(crop.width, crop.height, Rgba([1, 2, 3, 255]));
    other.save(c.crop_file(&crop)).unwrap();
    let report = c.audit();
    assert_eq!(report.violations.len(), 1, "{:?}", report.violations);
}

#[test]
fn snapshot_round_trip_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (c, _) = populated(&dir.path().join("a"));
    let snap1 = dir.path().join("s1");
    c.export_snapshot(&snap1).unwrap();
    let imported =
        Catalog::import_snapshot(&snap1, &dir.path().join("b"), Arc::new(Taxonomy::default_table())).unwrap();
    assert_eq!(imported.counts(), c.counts());
    assert!(imported.audit().is_clean());
    let snap2 = dir.path().join("s2");
    imported.export_snapshot(&snap2).unwrap();
    for name in SNAPSHOT_FILES {
        assert_eq!(std::fs::read(snap1.join(name)).unwrap(), std::fs::read(snap2.join(name)).unwrap(), "{name}");
    }
    assert!(c.export_snapshot(&snap1).is_err());
}
