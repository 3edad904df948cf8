use std::collections::HashSet;

use proptest::prelude::*;

use tlf_harris::config::Settings;
use tlf_harris::control::VirtualClock;
use tlf_harris::synth::{
    regular_polygon, render_events, verify_events, MotionSegment, Scene, Shape,
};
use tlf_harris::{build_detector, run_stream, DetectorKind, RunOptions, SensorGeometry};

fn geometry() -> SensorGeometry {
    SensorGeometry::new(64, 48).unwrap()
}

prop_compose! {
    fn shape()(
        n in 3usize..7,
        r in 3.0f64..9.0,
        phase in 0.0f64..6.3,
        cx in 14.0f64..50.0,
        cy in 12.0f64..36.0,
        contrast in prop_oneof![-1.5f64..-0.3, 0.3f64..1.5],
        vx in -60.0f64..60.0,
        vy in -60.0f64..60.0,
        w in -3.0f64..3.0,
    ) -> Shape {
        Shape {
            vertices: regular_polygon(n, r, phase),
            center: (cx, cy),
            angle: 0.0,
            log_contrast: contrast,
            motion: vec![MotionSegment {
                duration: 0.08,
                velocity: (vx, vy),
                angular_velocity: w,
            }],
        }
    }
}

prop_compose! {
    fn scene()(
        shapes in prop::collection::vec(shape(), 1..3),
        dt_us in 200i64..1500,
        c in 0.1f64..0.4,
    ) -> Scene {
        Scene {
            shapes,
            background: 1.0,
            duration: 0.12,
            contrast_threshold: c,
            dt: dt_us as f64 * 1e-6,
            noise_rate: 0.0,
            seed: 0,
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn rendered_streams_are_sound(s in scene()) {
        let g = geometry();
        let r = render_events(&s, g).unwrap();
        prop_assert!(r.events.windows(2).all(|w| w[0].ts <= w[1].ts));
        prop_assert_eq!(verify_events(&s, g, &r.events), vec![]);

        let f = render_events(&s.flipped(), g).unwrap();
        prop_assert_eq!(r.events.len(), f.events.len());
        for (a, b) in r.events.iter().zip(&f.events) {
            prop_assert_eq!((a.ts, a.u, a.v), (b.ts, b.u, b.v));
            prop_assert_eq!(a.pol, b.pol.flipped());
        }
        prop_assert_eq!(&r.tracks, &f.tracks);
    }

    #[test]
    fn tracks_follow_the_vertices(s in scene()) {
        let r = render_events(&s, geometry()).unwrap();
        let n: usize = s.shapes.iter().map(|x| x.vertices.len()).sum();
        prop_assert_eq!(r.tracks.len(), n);
        let dt = s.dt_micros();
        let mut id = 0;
        for shape in &s.shapes {
            for k in 0..shape.vertices.len() {
                let t = &r.tracks[id];
                prop_assert_eq!(t.id as usize, id);
                prop_assert_eq!(t.samples.len(), s.steps() + 1);
                for (i, p) in t.samples.iter().enumerate() {
                    prop_assert_eq!(p.ts, i as i64 * dt);
                    let (x, y) = shape.world_vertices(p.ts as f64 * 1e-6)[k];
                    prop_assert!((p.u - (x - 0.5)).abs() < 1e-9);
                    prop_assert!((p.v - (y - 0.5)).abs() < 1e-9);
                }
                id += 1;
            }
        }
    }

    #[test]
    fn corners_are_input_events(s in scene(), noise in 0.0f64..20.0) {
        let g = geometry();
        let s = Scene { noise_rate: noise, seed: 7, ..s };
        let events = render_events(&s, g).unwrap().events;
        let known: HashSet<_> = events.iter().map(|e| (e.ts, e.u, e.v, e.pol)).collect();
        let settings = Settings::default();
        let opts = RunOptions::new(&settings);
        for kind in DetectorKind::ALL {
            let mut det = build_detector(kind, g, &settings);
            let run = run_stream(det.as_mut(), &events, &mut VirtualClock::new(), &opts);
            prop_assert!(run.counters.is_monotone());
            prop_assert_eq!(run.counters.events_in, events.len() as u64);
            prop_assert_eq!(run.counters.corners, run.corners.len() as u64);
            for c in &run.corners {
                prop_assert!(known.contains(&(c.ts, c.u, c.v, c.pol)));
            }
            prop_assert!(run.corners.windows(2).all(|w| w[0].ts <= w[1].ts));
        }
    }
}

#[test]
fn resting_scene_is_silent() {
    let shape = Shape {
        vertices: regular_polygon(4, 6.0, 0.3),
        center: (30.0, 20.0),
        angle: 0.0,
        log_contrast: 1.0,
        motion: vec![],
    };
    let s = Scene {
        shapes: vec![shape],
        background: 1.0,
        duration: 0.05,
        contrast_threshold: 0.25,
        dt: 0.001,
        noise_rate: 0.0,
        seed: 0,
    };
    let r = render_events(&s, geometry()).unwrap();
    assert!(r.events.is_empty());
    assert_eq!(r.tracks.len(), 4);
    assert!(r.tracks.iter().all(|t| t.samples.len() == 51));
}
