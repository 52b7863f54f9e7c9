//! Keyframe recipes for the animation vocabulary.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::compile::{Keyframe, Timeline};
use crate::model::{AnimationCategory, AnimationType};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Property {
    Opacity,
    Scale,
    /// Vertical scale anchored at the baseline, used by bar growth.
    ScaleY,
    TranslateX,
    TranslateY,
    ClipFraction,
    WheelFraction,
}

impl Property {
    pub const ALL: [Property; 7] = [
        Property::Opacity,
        Property::Scale,
        Property::ScaleY,
        Property::TranslateX,
        Property::TranslateY,
        Property::ClipFraction,
        Property::WheelFraction,
    ];

    /// Resting value when an element has no keyframes for the property.
    pub fn rest_value(self) -> f64 {
        match self {
            Property::TranslateX | Property::TranslateY => 0.0,
            _ => 1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Property::Opacity => "opacity",
            Property::Scale => "scale",
            Property::ScaleY => "scale_y",
            Property::TranslateX => "translate_x",
            Property::TranslateY => "translate_y",
            Property::ClipFraction => "clip_fraction",
            Property::WheelFraction => "wheel_fraction",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Easing {
    Linear,
    EaseIn,
    EaseOut,
    EaseInOut,
}

impl Easing {
    pub fn apply(self, t: f64) -> f64 {
        let t = t.clamp(0.0, 1.0);
        match self {
            Easing::Linear => t,
            Easing::EaseIn => t * t,
            Easing::EaseOut => 1.0 - (1.0 - t) * (1.0 - t),
            Easing::EaseInOut => {
                if t < 0.5 {
                    2.0 * t * t
                } else {
                    1.0 - (-2.0 * t + 2.0).powi(2) / 2.0
                }
            }
        }
    }

    pub fn css(self) -> &'static str {
        match self {
            Easing::Linear => "linear",
            Easing::EaseIn => "ease-in",
            Easing::EaseOut => "ease-out",
            Easing::EaseInOut => "ease-in-out",
        }
    }
}

/// Fraction of an emphasis interval spent ramping in and out.
pub const EMPHASIS_RAMP: f64 = 0.15;
pub const ANNOTATION_FADE_SECONDS: f64 = 0.5;

const HIGHLIGHT_DIM: f64 = 0.2;
const SHINE_DIM: f64 = 0.4;
const BOUNCE_PEAK: f64 = 1.15;
const ZOOM_PEAK: f64 = 1.25;

#[derive(Debug, Clone, PartialEq)]
pub struct ElementKeyframe {
    pub element_id: String,
    pub keyframe: Keyframe,
}

/// Keyframes produced by one directive, plus the elements it requires to
/// start hidden.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Effect {
    pub keyframes: Vec<ElementKeyframe>,
    pub starts_hidden: BTreeSet<String>,
}

impl Effect {
    fn push(&mut self, id: &str, time: f64, property: Property, value: f64, easing: Easing) {
        self.keyframes.push(ElementKeyframe {
            element_id: id.to_string(),
            keyframe: Keyframe {
                time,
                property,
                value,
                easing,
            },
        });
    }

    fn ramp(&mut self, id: &str, (t0, t1): (f64, f64), property: Property, from: f64, to: f64, easing: Easing) {
        self.push(id, t0, property, from, easing);
        self.push(id, t1, property, to, easing);
    }
}

/// What a recipe may look at: the chart's marks and legends and the
/// timeline compiled so far.
pub struct RecipeContext<'a> {
    pub marks: &'a BTreeSet<String>,
    pub legends: &'a BTreeSet<String>,
    pub state: &'a Timeline,
}

/// Keyframes realizing `animation` on `targets` over `interval`. Entrances
/// animate from a hidden start to the resting state, emphases perturb a
/// property and restore the value it had at the interval start, and exits
/// fade to transparent.
pub fn keyframes_for(
    animation: AnimationType,
    targets: &BTreeSet<String>,
    interval: (f64, f64),
    ctx: &RecipeContext<'_>,
) -> Effect {
    use AnimationType as A;
    let (t0, t1) = interval;
    let len = t1 - t0;
    let delta = EMPHASIS_RAMP * len;
    let mut fx = Effect::default();

    if animation.category() == AnimationCategory::Entrance {
        fx.starts_hidden.extend(targets.iter().cloned());
    }
    for id in targets {
        match animation {
            A::FadeIn | A::AxesFadeIn | A::ScatterFadeIn => {
                fx.ramp(id, interval, Property::Opacity, 0.0, 1.0, Easing::Linear)
            }
            A::BarGrowIn | A::BarGrowAndLegendFadeIn => {
                fx.ramp(id, interval, Property::ScaleY, 0.0, 1.0, Easing::EaseOut)
            }
            A::LineWipeIn | A::LineWipeAndLegendFadeIn => {
                fx.ramp(id, interval, Property::ClipFraction, 0.0, 1.0, Easing::Linear)
            }
            A::PieWheelIn | A::PieWheelInAndLegendFlyIn => {
                fx.ramp(id, interval, Property::WheelFraction, 0.0, 1.0, Easing::Linear)
            }
            A::FloatIn => {
                fx.ramp(id, interval, Property::TranslateY, 20.0, 0.0, Easing::EaseOut);
                fx.ramp(id, interval, Property::Opacity, 0.0, 1.0, Easing::Linear);
            }
            A::FlyIn => {
                fx.ramp(id, interval, Property::TranslateX, -40.0, 0.0, Easing::EaseOut);
                fx.ramp(id, interval, Property::Opacity, 0.0, 1.0, Easing::Linear);
            }
            A::ZoomIn => {
                fx.ramp(id, interval, Property::Scale, 0.5, 1.0, Easing::EaseOut);
                fx.ramp(id, interval, Property::Opacity, 0.0, 1.0, Easing::Linear);
            }
            A::BarBounce | A::ZoomInThenZoomOut | A::ShineInAShortDuration => {
                if !ctx.state.visible_at(id, t0) {
                    continue;
                }
                match animation {
                    A::BarBounce => {
                        let v = ctx.state.value_at(id, Property::ScaleY, t0);
                        for (k, scale) in [1.0, BOUNCE_PEAK, 1.0, BOUNCE_PEAK, 1.0].iter().enumerate() {
                            let t = if k == 4 { t1 } else { t0 + len * k as f64 / 4.0 };
                            fx.push(id, t, Property::ScaleY, v * scale, Easing::EaseInOut);
                        }
                    }
                    A::ZoomInThenZoomOut => {
                        let v = ctx.state.value_at(id, Property::Scale, t0);
                        fx.push(id, t0, Property::Scale, v, Easing::EaseInOut);
                        fx.push(id, t0 + delta, Property::Scale, v * ZOOM_PEAK, Easing::Linear);
                        fx.push(id, t1 - delta, Property::Scale, v * ZOOM_PEAK, Easing::EaseInOut);
                        fx.push(id, t1, Property::Scale, v, Easing::Linear);
                    }
                    _ => {
                        let v = ctx.state.value_at(id, Property::Opacity, t0);
                        for k in 0..7 {
                            let t = if k == 6 { t1 } else { t0 + len * k as f64 / 6.0 };
                            let value = if k % 2 == 0 { v } else { v * SHINE_DIM };
                            fx.push(id, t, Property::Opacity, value, Easing::EaseInOut);
                        }
                    }
                }
            }
            A::HighlightOneAndFadeOthers => {}
            A::FadeOut => {
                let v = ctx.state.value_at(id, Property::Opacity, t0);
                fx.ramp(id, interval, Property::Opacity, v, 0.0, Easing::Linear);
            }
        }
    }

    match animation {
        A::LineWipeAndLegendFadeIn | A::BarGrowAndLegendFadeIn => {
            for id in ctx.legends.difference(targets) {
                fx.starts_hidden.insert(id.clone());
                fx.ramp(id, interval, Property::Opacity, 0.0, 1.0, Easing::Linear);
            }
        }
        A::PieWheelInAndLegendFlyIn => {
            for id in ctx.legends.difference(targets) {
                fx.starts_hidden.insert(id.clone());
                fx.ramp(id, interval, Property::TranslateX, -40.0, 0.0, Easing::EaseOut);
                fx.ramp(id, interval, Property::Opacity, 0.0, 1.0, Easing::Linear);
            }
        }
        A::HighlightOneAndFadeOthers => {
            for id in ctx.marks.difference(targets) {
                if !ctx.state.visible_at(id, t0) {
                    continue;
                }
                let v = ctx.state.value_at(id, Property::Opacity, t0);
                fx.push(id, t0, Property::Opacity, v, Easing::Linear);
                fx.push(id, t0 + delta, Property::Opacity, v * HIGHLIGHT_DIM, Easing::Linear);
                fx.push(id, t1 - delta, Property::Opacity, v * HIGHLIGHT_DIM, Easing::Linear);
                fx.push(id, t1, Property::Opacity, v, Easing::Linear);
            }
        }
        _ => {}
    }
    fx
}
