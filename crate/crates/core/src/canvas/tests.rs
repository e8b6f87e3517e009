use super::*;

fn solid(w: u32, h: u32, c: [u8; 4]) -> RgbaImage {
    RgbaImage::from_pixel(w, h, Rgba(c))
}

fn source() -> InMemoryCrops {
    let mut m = InMemoryCrops::default();
    m.0.insert("a".into(), RgbaImage::from_fn(100, 80, |x, y| Rgba([x as u8, y as u8, 7, 255])));
    m.0.insert("red".into(), solid(10, 10, [255, 0, 0, 255]));
    m.0.insert("blue".into(), solid(10, 10, [0, 0, 255, 255]));
    m.0.insert("white".into(), solid(4, 4, [255, 255, 255, 255]));
    m
}

#[test]
fn scaled_placement_size() {
    let src = source();
    let comp = place(&CanvasComposition::new(1024).unwrap(), &src, "a", 3, 4, 0.5).unwrap();
    let p = &comp.placements[0];
    assert_eq!((p.width, p.height, p.x, p.y), (50, 40, 3, 4));
}

#[test]
fn place_is_value_semantic_and_checks_bounds() {
    let src = source();
    let empty = CanvasComposition::new(100).unwrap();
    let one = place(&empty, &src, "red", 0, 0, 1.0).unwrap();
    assert!(empty.placements.is_empty());
    assert_eq!(one.placements.len(), 1);
    assert!(matches!(place(&one, &src, "a", 50, 0, 1.0), Err(CanvasError::OutOfBounds { .. })));
    assert!(matches!(place(&one, &src, "nope", 0, 0, 1.0), Err(CanvasError::UnknownCrop(_))));
    assert_eq!(place(&one, &src, "red", 0, 0, 0.0), Err(CanvasError::InvalidScale));
    assert_eq!(place(&one, &src, "red", 0, 0, f64::NAN), Err(CanvasError::InvalidScale));
    // exactly touching the far edge is fine
    assert!(place(&one, &src, "red", 90, 90, 1.0).is_ok());
    assert_eq!(CanvasComposition::new(0), Err(CanvasError::InvalidSide));
}

#[test]
fn later_placement_on_top() {
    let src = source();
    let c = CanvasComposition::new(32).unwrap();
    let c = place(&c, &src, "red", 0, 0, 1.0).unwrap();
    let c = place(&c, &src, "blue", 5, 5, 1.0).unwrap();
    let (base, mask) = render_base(&c, &src).unwrap();
    assert_eq!(base.get_pixel(2, 2), &Rgba([255, 0, 0, 255]));
    assert_eq!(base.get_pixel(7, 7), &Rgba([0, 0, 255, 255]));
    assert_eq!(base.get_pixel(20, 20), &BACKGROUND);
    assert_eq!(mask.get_pixel(20, 20)[0], MASK_UNFILLED);
    assert_eq!(mask.get_pixel(7, 7)[0], MASK_FILLED);
    assert_eq!(c.placements.len(), 2);
}

#[test]
fn mask_counts() {
    let src = source();
    let c = place(&CanvasComposition::new(1024).unwrap(), &src, "a", 100, 200, 0.5).unwrap();
    let (_, mask) = render_base(&c, &src).unwrap();
    let unfilled = mask.pixels().filter(|p| p[0] == MASK_UNFILLED).count();
    assert_eq!(unfilled, 1024 * 1024 - 2000);

    let c = place(&CanvasComposition::new(10).unwrap(), &src, "red", 0, 0, 1.0).unwrap();
    let (_, mask) = render_base(&c, &src).unwrap();
    assert!(mask.pixels().all(|p| p[0] == MASK_FILLED));
}

#[test]
fn white_crops_are_still_filled() {
    let src = source();
    let c = place(&CanvasComposition::new(8).unwrap(), &src, "white", 0, 0, 1.0).unwrap();
    let (base, mask) = render_base(&c, &src).unwrap();
    assert_eq!(base.get_pixel(1, 1), &BACKGROUND);
    assert_eq!(mask.get_pixel(1, 1)[0], MASK_FILLED);
}

#[test]
fn nothing_placed() {
    let src = source();
    let c = CanvasComposition::new(8).unwrap();
    let err = render_base(&c, &src).unwrap_err();
    assert_eq!(err.to_string(), "nothing placed");
}

#[test]
fn nearest_neighbor_exact() {
    // upscaling by 2 duplicates each source pixel
    let crop = RgbaImage::from_fn(3, 2, |x, y| Rgba([x as u8, y as u8, 0, 255]));
    let big = scale_nearest(&crop, 6, 4);
    for (x, y, p) in big.enumerate_pixels() {
        assert_eq!(p, crop.get_pixel(x / 2, y / 2));
    }
    // identity
    assert_eq!(scale_nearest(&crop, 3, 2), crop);
    // halving picks pixel centers
    assert_eq!(nearest_index(0, 4, 2), 1);
    assert_eq!(nearest_index(1, 4, 2), 3);
}

#[tokio::test]
async fn mock_generation() {
    let src = source();
    let c = place(&CanvasComposition::new(20).unwrap(), &src, "red", 0, 0, 1.0).unwrap();
    let c = place(&c, &src, "blue", 10, 10, 1.0).unwrap().with_prompt("a stormy sea");
    let mock = MockProvider::new();
    let out = generate(&mock, &c, &src).await.unwrap();
    let again = generate(&mock, &c, &src).await.unwrap();
    assert_eq!(encode_png(&out), encode_png(&again));
    assert_eq!(out.get_pixel(0, 0), &Rgba([255, 0, 0, 255]));
    assert_eq!(out.get_pixel(19, 19), &Rgba([0, 0, 255, 255]));
    // 100 red and 100 blue pixels: mean (127.5, 0, 127.5) rounds half up
    assert_eq!(out.get_pixel(15, 0), &Rgba([128, 0, 128, 255]));
}

#[tokio::test]
async fn generation_preconditions() {
    let src = source();
    let c = place(&CanvasComposition::new(20).unwrap(), &src, "red", 0, 0, 1.0).unwrap();
    let mock = MockProvider::new();
    assert_eq!(generate(&mock, &c, &src).await, Err(CanvasError::EmptyPrompt));
    let c = c.with_prompt("x");
    let small = MockProvider::new().with_max_side(16);
    assert!(matches!(generate(&small, &c, &src).await, Err(CanvasError::OversizedCanvas { side: 20, max: 16 })));
    let failing = MockProvider::failing("boom");
    assert_eq!(generate(&failing, &c, &src).await, Err(CanvasError::Provider("boom".into())));
}

struct WrongSize;

#[async_trait]
impl OutpaintingProvider for WrongSize {
    fn id(&self) -> &str {
        "wrong"
    }
    fn max_side(&self) -> u32 {
        4096
    }
    async fn outpaint(&self, _: &OutpaintRequest) -> Result<RgbaImage, CanvasError> {
        Ok(RgbaImage::new(3, 3))
    }
}

#[tokio::test]
async fn wrong_dimensions_are_a_contract_violation() {
    let src = source();
    let c = place(&CanvasComposition::new(20).unwrap(), &src, "red", 0, 0, 1.0).unwrap().with_prompt("x");
    let err = generate(&WrongSize, &c, &src).await.unwrap_err();
    assert!(err.to_string().starts_with("provider contract violation"));
}

#[test]
fn wire_round_trip() {
    let src = source();
    let c = place(&CanvasComposition::new(12).unwrap(), &src, "red", 1, 1, 1.0).unwrap().with_prompt("p");
    let (base, mask) = render_base(&c, &src).unwrap();
    let req = OutpaintRequest { base, mask, prompt: "p".into(), side: 12 };
    let wire = OutpaintWireRequest::from_request(&req);
    assert_eq!(wire.decode().unwrap(), req);
    let mut bad = wire.clone();
    bad.size = 13;
    assert!(bad.decode().is_err());
}

#[test]
fn generated_record() {
    let src = source();
    let c = place(&CanvasComposition::new(40).unwrap(), &src, "red", 0, 0, 1.0).unwrap();
    let c = place(&c, &src, "blue", 0, 0, 2.0).unwrap();
    let c = place(&c, &src, "red", 20, 20, 1.0).unwrap();
    let g = GeneratedImage::new("j1", Some("s"), &c, "mock", chrono::DateTime::UNIX_EPOCH);
    assert_eq!(g.used_objects, vec!["red", "blue"]);
    assert_eq!(g.image_path, "generated/j1.png");
    assert_eq!((g.width, g.height), (40, 40));
}
