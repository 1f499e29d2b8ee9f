//! Detector classes, mobility groups, and box utilities.
//!
//! The thermal detector distinguishes twelve classes: eleven person
//! categories plus cars. Classes partition into four mobility groups that
//! drive the signal controller: walking impairments (wheelchair, rollator,
//! crutches, walking stick), visual impairments (blind-guidance stick),
//! mobility burdens (luggage, stroller, bicycle, luggage trolley, dog), and
//! the unrestricted remainder (plain pedestrians and cars). Restricted
//! groups carry a maximum green-extension budget and a priority; asking for
//! either on the unrestricted group is a domain error.

use serde::{Deserialize, Serialize};

use crate::geometry::Point;
use crate::{ControlError, Result};

/// The twelve detector classes, in stable index order 0..=11.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ObjectClass {
    PersonWithoutMobilityRestrictions,
    PersonWithWheelchair,
    PersonWithRollator,
    PersonWithCrutches,
    PersonWithBlindstick,
    PersonWithLuggage,
    PersonWithStroller,
    PersonWithBicycle,
    PersonWithLuggageTrolley,
    PersonWithDog,
    PersonWithWalkingStick,
    Car,
}

impl ObjectClass {
    /// All classes in index order.
    pub const ALL: [ObjectClass; 12] = [
        ObjectClass::PersonWithoutMobilityRestrictions,
        ObjectClass::PersonWithWheelchair,
        ObjectClass::PersonWithRollator,
        ObjectClass::PersonWithCrutches,
        ObjectClass::PersonWithBlindstick,
        ObjectClass::PersonWithLuggage,
        ObjectClass::PersonWithStroller,
        ObjectClass::PersonWithBicycle,
        ObjectClass::PersonWithLuggageTrolley,
        ObjectClass::PersonWithDog,
        ObjectClass::PersonWithWalkingStick,
        ObjectClass::Car,
    ];

    pub fn index(self) -> usize {
        ObjectClass::ALL
            .iter()
            .position(|&c| c == self)
            .expect("class is in ALL")
    }

    pub fn from_index(index: usize) -> Result<ObjectClass> {
        ObjectClass::ALL.get(index).copied().ok_or_else(|| {
            ControlError::Domain(format!("class index {index} out of range 0..=11"))
        })
    }

    /// Canonical snake_case name; line `index` of the class-names file.
    pub fn name(self) -> &'static str {
        match self {
            ObjectClass::PersonWithoutMobilityRestrictions => {
                "person_without_mobility_restrictions"
            }
            ObjectClass::PersonWithWheelchair => "person_with_wheelchair",
            ObjectClass::PersonWithRollator => "person_with_rollator",
            ObjectClass::PersonWithCrutches => "person_with_crutches",
            ObjectClass::PersonWithBlindstick => "person_with_blindstick",
            ObjectClass::PersonWithLuggage => "person_with_luggage",
            ObjectClass::PersonWithStroller => "person_with_stroller",
            ObjectClass::PersonWithBicycle => "person_with_bicycle",
            ObjectClass::PersonWithLuggageTrolley => "person_with_luggage_trolley",
            ObjectClass::PersonWithDog => "person_with_dog",
            ObjectClass::PersonWithWalkingStick => "person_with_walking_stick",
            ObjectClass::Car => "car",
        }
    }

    /// The class-names file: one name per line, line number = class index.
    pub fn names_file_contents() -> String {
        let mut s = String::new();
        for class in ObjectClass::ALL {
            s.push_str(class.name());
            s.push('\n');
        }
        s
    }

    /// The mobility group the class maps to.
    pub fn group(self) -> MobilityGroup {
        match self {
            ObjectClass::PersonWithWheelchair
            | ObjectClass::PersonWithRollator
            | ObjectClass::PersonWithCrutches
            | ObjectClass::PersonWithWalkingStick => MobilityGroup::WalkingImpairment,
            ObjectClass::PersonWithBlindstick => MobilityGroup::VisualImpairment,
            ObjectClass::PersonWithLuggage
            | ObjectClass::PersonWithStroller
            | ObjectClass::PersonWithBicycle
            | ObjectClass::PersonWithLuggageTrolley
            | ObjectClass::PersonWithDog => MobilityGroup::MobilityBurden,
            ObjectClass::PersonWithoutMobilityRestrictions | ObjectClass::Car => {
                MobilityGroup::Unrestricted
            }
        }
    }
}

/// Mobility groups relevant to signal control.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MobilityGroup {
    WalkingImpairment,
    VisualImpairment,
    MobilityBurden,
    Unrestricted,
}

impl MobilityGroup {
    /// The three groups that can claim green extensions, in priority order
    /// (most urgent first).
    pub const RESTRICTED: [MobilityGroup; 3] = [
        MobilityGroup::VisualImpairment,
        MobilityGroup::WalkingImpairment,
        MobilityGroup::MobilityBurden,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MobilityGroup::WalkingImpairment => "walking_impairment",
            MobilityGroup::VisualImpairment => "visual_impairment",
            MobilityGroup::MobilityBurden => "mobility_burden",
            MobilityGroup::Unrestricted => "unrestricted",
        }
    }

    /// Default green-extension budget in whole seconds. Derived from field
    /// measurements of extra crossing time (95th percentile, rounded):
    /// walking impairments 6, visual impairments 8, mobility burdens 3.
    pub fn max_extension_seconds(self) -> Result<u32> {
        match self {
            MobilityGroup::WalkingImpairment => Ok(6),
            MobilityGroup::VisualImpairment => Ok(8),
            MobilityGroup::MobilityBurden => Ok(3),
            MobilityGroup::Unrestricted => Err(ControlError::UnsupportedGroup(
                self.name(),
                "extension budget",
            )),
        }
    }

    /// Priority rank: lower is more urgent. Visual impairments outrank
    /// walking impairments, which outrank mobility burdens.
    pub fn priority_rank(self) -> Result<u32> {
        match self {
            MobilityGroup::VisualImpairment => Ok(0),
            MobilityGroup::WalkingImpairment => Ok(1),
            MobilityGroup::MobilityBurden => Ok(2),
            MobilityGroup::Unrestricted => {
                Err(ControlError::UnsupportedGroup(self.name(), "priority rank"))
            }
        }
    }

    /// True for the three groups that participate in signal control.
    pub fn is_restricted(self) -> bool {
        self != MobilityGroup::Unrestricted
    }
}

/// Axis-aligned box with strictly positive extent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    x_min: f64,
    y_min: f64,
    x_max: f64,
    y_max: f64,
}

impl BoundingBox {
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Result<BoundingBox> {
        for v in [x_min, y_min, x_max, y_max] {
            if !v.is_finite() {
                return Err(ControlError::Domain(format!(
                    "box coordinates must be finite, got {v}"
                )));
            }
        }
        if x_min >= x_max || y_min >= y_max {
            return Err(ControlError::Domain(format!(
                "box must have positive extent, got [{x_min}, {y_min}, {x_max}, {y_max}]"
            )));
        }
        Ok(BoundingBox {
            x_min,
            y_min,
            x_max,
            y_max,
        })
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn y_min(&self) -> f64 {
        self.y_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn y_max(&self) -> f64 {
        self.y_max
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    /// Ground-contact proxy: the bottom-center of the box. With image
    /// coordinates growing downward this is where the feet (or wheels)
    /// meet the ground, the right point to test against a crossing zone.
    pub fn anchor_point(&self) -> Point {
        Point::new((self.x_min + self.x_max) / 2.0, self.y_max)
            .expect("box coordinates are finite")
    }
}

/// Intersection-over-union of two boxes; 0 when they are disjoint.
pub fn iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let ix = (a.x_max.min(b.x_max) - a.x_min.max(b.x_min)).max(0.0);
    let iy = (a.y_max.min(b.y_max) - a.y_min.max(b.y_min)).max(0.0);
    let inter = ix * iy;
    if inter <= 0.0 {
        return 0.0;
    }
    let union = a.area() + b.area() - inter;
    inter / union
}

/// One detected object in one camera frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub object_class: ObjectClass,
    pub bbox: BoundingBox,
    pub confidence: f64,
    pub camera_id: u32,
    pub timestamp_ms: u64,
}

impl Detection {
    pub fn new(
        object_class: ObjectClass,
        bbox: BoundingBox,
        confidence: f64,
        camera_id: u32,
        timestamp_ms: u64,
    ) -> Result<Detection> {
        if !(0.0..=1.0).contains(&confidence) {
            return Err(ControlError::Domain(format!(
                "confidence must lie in [0, 1], got {confidence}"
            )));
        }
        Ok(Detection {
            object_class,
            bbox,
            confidence,
            camera_id,
            timestamp_ms,
        })
    }
}

/// All detections of a single camera frame. May be empty; emptiness is what
/// the controller's absence counting keys on.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameDetections {
    camera_id: u32,
    timestamp_ms: u64,
    detections: Vec<Detection>,
}

impl FrameDetections {
    pub fn new(
        camera_id: u32,
        timestamp_ms: u64,
        detections: Vec<Detection>,
    ) -> Result<FrameDetections> {
        for d in &detections {
            if d.camera_id != camera_id || d.timestamp_ms != timestamp_ms {
                return Err(ControlError::Domain(format!(
                    "detection stamped camera {} at {} ms does not belong to frame camera {} at {} ms",
                    d.camera_id, d.timestamp_ms, camera_id, timestamp_ms
                )));
            }
        }
        Ok(FrameDetections {
            camera_id,
            timestamp_ms,
            detections,
        })
    }

    pub fn camera_id(&self) -> u32 {
        self.camera_id
    }

    pub fn timestamp_ms(&self) -> u64 {
        self.timestamp_ms
    }

    pub fn detections(&self) -> &[Detection] {
        &self.detections
    }
}
