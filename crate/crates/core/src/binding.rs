//! Synthetic two-object attribute-binding tasks.
//!
//! A scene holds two objects. A task turns a scene into a binary choice
//! between a truthful prompt and a distractor:
//!
//! * `Control(attr)`: one object's `attr` against a value absent from the scene;
//! * `Binding(target | given)`: an object described by `{target, given}`
//!   against the same description carrying the other object's `target`;
//! * `Pair(a, b)`: both objects described by `{a, b}` against the same pair
//!   with `a` swapped between the objects.
//!
//! Descriptions follow a fixed template, e.g. `"A yellow sphere."` or
//! `"On the right is a gray object."`.

use std::fmt;
use std::str::FromStr;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, ContinuousCDF};
use statrs::function::factorial::ln_binomial;

use crate::classifier::{Engine, PruningConfig};
use crate::diffusion::{Condition, NoiseSchedule};
use crate::error::{contract, Error, Result};
use crate::rng::{stream_rng, EpisodeRng, Stream};
use crate::weighting::WeightingSpec;
use crate::world::GaussianWorld;

pub const SHAPES: [&str; 3] = ["cube", "sphere", "cylinder"];
pub const COLORS: [&str; 8] = ["blue", "cyan", "brown", "gray", "green", "purple", "red", "yellow"];
pub const SIZES: [&str; 2] = ["small", "large"];
pub const POSITIONS: [&str; 2] = ["left", "right"];

/// A describable object attribute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Attribute {
    Shape,
    Color,
    Size,
    Position,
}

impl Attribute {
    pub const ALL: [Attribute; 4] = [Attribute::Shape, Attribute::Color, Attribute::Size, Attribute::Position];
    /// Ordering preference for pair prompts: the description carrying the
    /// leftmost object's value of the first listed attribute goes first.
    const ORDER_PRIORITY: [Attribute; 4] =
        [Attribute::Position, Attribute::Shape, Attribute::Color, Attribute::Size];

    pub fn vocabulary(self) -> &'static [&'static str] {
        match self {
            Attribute::Shape => &SHAPES,
            Attribute::Color => &COLORS,
            Attribute::Size => &SIZES,
            Attribute::Position => &POSITIONS,
        }
    }

    fn bit(self) -> u8 {
        1 << self as u8
    }

    fn of_word(word: &str) -> Option<Attribute> {
        Attribute::ALL
            .into_iter()
            .find(|a| a.vocabulary().contains(&word))
    }
}

impl fmt::Display for Attribute {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Attribute::Shape => "Shape",
            Attribute::Color => "Color",
            Attribute::Size => "Size",
            Attribute::Position => "Position",
        })
    }
}

impl FromStr for Attribute {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "shape" => Ok(Attribute::Shape),
            "color" | "colour" => Ok(Attribute::Color),
            "size" => Ok(Attribute::Size),
            "position" => Ok(Attribute::Position),
            other => Err(Error::Parse(format!(
                "unknown attribute {other:?}; expected Shape | Color | Size | Position"
            ))),
        }
    }
}

/// A set of attributes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct AttrSet(u8);

impl AttrSet {
    pub fn of(attrs: &[Attribute]) -> Self {
        Self(attrs.iter().fold(0, |acc, a| acc | a.bit()))
    }

    pub fn contains(self, a: Attribute) -> bool {
        self.0 & a.bit() != 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }
}

/// One object in a scene. Values are drawn from the fixed vocabularies.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ObjectSpec {
    pub shape: String,
    pub color: String,
    pub size: String,
    pub position: String,
}

impl ObjectSpec {
    pub fn new(shape: &str, color: &str, size: &str, position: &str) -> Result<Self> {
        let obj = Self {
            shape: shape.to_string(),
            color: color.to_string(),
            size: size.to_string(),
            position: position.to_string(),
        };
        obj.validate()?;
        Ok(obj)
    }

    fn validate(&self) -> Result<()> {
        for a in Attribute::ALL {
            if !a.vocabulary().contains(&self.get(a)) {
                return Err(contract(format!("{:?} is not a valid {a}", self.get(a))));
            }
        }
        Ok(())
    }

    pub fn get(&self, attr: Attribute) -> &str {
        match attr {
            Attribute::Shape => &self.shape,
            Attribute::Color => &self.color,
            Attribute::Size => &self.size,
            Attribute::Position => &self.position,
        }
    }

    fn set(&mut self, attr: Attribute, value: &str) {
        let slot = match attr {
            Attribute::Shape => &mut self.shape,
            Attribute::Color => &mut self.color,
            Attribute::Size => &mut self.size,
            Attribute::Position => &mut self.position,
        };
        *slot = value.to_string();
    }
}

/// Two objects with different shapes and colors, one on each side.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scene {
    pub objects: [ObjectSpec; 2],
}

impl Scene {
    pub fn new(a: ObjectSpec, b: ObjectSpec) -> Result<Self> {
        let scene = Self { objects: [a, b] };
        scene.validate()?;
        Ok(scene)
    }

    pub fn validate(&self) -> Result<()> {
        let [a, b] = &self.objects;
        a.validate()?;
        b.validate()?;
        if a.shape == b.shape {
            return Err(contract("scene objects must have different shapes"));
        }
        if a.color == b.color {
            return Err(contract("scene objects must have different colors"));
        }
        if a.position == b.position {
            return Err(contract("scene objects must occupy left and right"));
        }
        Ok(())
    }

    /// The scene used in the illustrative examples: a small yellow sphere
    /// on the left, a large gray cube on the right.
    pub fn reference() -> Self {
        Self {
            objects: [
                ObjectSpec::new("sphere", "yellow", "small", "left").expect("valid"),
                ObjectSpec::new("cube", "gray", "large", "right").expect("valid"),
            ],
        }
    }

    fn leftmost(&self) -> usize {
        if self.objects[0].position == "left" {
            0
        } else {
            1
        }
    }

    fn has_value(&self, attr: Attribute, value: &str) -> bool {
        self.objects.iter().any(|o| o.get(attr) == value)
    }

    /// Draws a random valid scene; sizes differ when `distinct_sizes`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, distinct_sizes: bool) -> Self {
        let shapes: Vec<&&str> = SHAPES.choose_multiple(rng, 2).collect();
        let colors: Vec<&&str> = COLORS.choose_multiple(rng, 2).collect();
        let first_size = *SIZES.choose(rng).expect("nonempty");
        let second_size = if distinct_sizes {
            if first_size == SIZES[0] {
                SIZES[1]
            } else {
                SIZES[0]
            }
        } else {
            *SIZES.choose(rng).expect("nonempty")
        };
        let mut positions = POSITIONS;
        positions.shuffle(rng);
        Self {
            objects: [
                ObjectSpec::new(shapes[0], colors[0], first_size, positions[0]).expect("valid"),
                ObjectSpec::new(shapes[1], colors[1], second_size, positions[1]).expect("valid"),
            ],
        }
    }
}

/// The kind of binary choice built from a scene.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TaskKind {
    Control { attr: Attribute },
    Binding { target: Attribute, given: Attribute },
    Pair { first: Attribute, second: Attribute },
}

impl TaskKind {
    pub fn validate(&self) -> Result<()> {
        match *self {
            TaskKind::Control { attr } => {
                if matches!(attr, Attribute::Size | Attribute::Position) {
                    // both values of a two-valued attribute are always present
                    Err(contract(format!("control task {attr} has no absent value to use as a distractor")))
                } else {
                    Ok(())
                }
            }
            TaskKind::Binding { target: a, given: b } | TaskKind::Pair { first: a, second: b } => {
                if a == b {
                    Err(contract(format!("task attributes must differ, got {a} and {b}")))
                } else {
                    Ok(())
                }
            }
        }
    }

    pub fn attributes(&self) -> AttrSet {
        match *self {
            TaskKind::Control { attr } => AttrSet::of(&[attr]),
            TaskKind::Binding { target, given } => AttrSet::of(&[target, given]),
            TaskKind::Pair { first, second } => AttrSet::of(&[first, second]),
        }
    }

    fn needs_distinct_sizes(&self) -> bool {
        self.attributes().contains(Attribute::Size)
    }

    /// Every accepted task string, for usage messages.
    pub fn usage() -> &'static str {
        "Shape | Color (control), <Target>|<Given> (binding, e.g. Color|Shape), \
         <A>,<B> (pair, e.g. Shape,Size); attributes: Shape, Color, Size, Position"
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TaskKind::Control { attr } => write!(f, "{attr}"),
            TaskKind::Binding { target, given } => write!(f, "{target}|{given}"),
            TaskKind::Pair { first, second } => write!(f, "{first},{second}"),
        }
    }
}

impl FromStr for TaskKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |e: Error| Error::Parse(format!("invalid task {s:?}: {e}. Valid kinds: {}", TaskKind::usage()));
        let kind = if let Some((a, b)) = s.split_once('|') {
            TaskKind::Binding {
                target: a.parse().map_err(bad)?,
                given: b.parse().map_err(bad)?,
            }
        } else if let Some((a, b)) = s.split_once(',') {
            TaskKind::Pair {
                first: a.parse().map_err(bad)?,
                second: b.parse().map_err(bad)?,
            }
        } else {
            TaskKind::Control { attr: s.parse().map_err(bad)? }
        };
        kind.validate().map_err(bad)?;
        Ok(kind)
    }
}

/// One binary-choice example.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinaryExample {
    pub scene: Scene,
    pub positive: String,
    pub negative: String,
    pub task: String,
}

/// Renders `object` restricted to `include`.
pub fn describe(object: &ObjectSpec, include: AttrSet) -> Result<String> {
    if include.is_empty() {
        return Err(contract("describe needs at least one attribute"));
    }
    let mut s = if include.contains(Attribute::Position) {
        format!("On the {} is a ", object.position)
    } else {
        "A ".to_string()
    };
    if include.contains(Attribute::Size) {
        s.push_str(&object.size);
        s.push(' ');
    }
    if include.contains(Attribute::Color) {
        s.push_str(&object.color);
        s.push(' ');
    }
    if include.contains(Attribute::Shape) {
        s.push_str(&object.shape);
    } else {
        s.push_str("object");
    }
    s.push('.');
    Ok(s)
}

/// Joins two descriptions into `"<first> and <second>"`.
fn join_pair(first: &str, second: &str) -> String {
    let head = first.strip_suffix('.').unwrap_or(first);
    let mut chars = second.chars();
    let tail = match chars.next() {
        Some(c) => c.to_lowercase().collect::<String>() + chars.as_str(),
        None => String::new(),
    };
    format!("{head} and {tail}")
}

/// Orders two described objects: the one carrying the leftmost object's
/// value of the highest-priority task attribute comes first.
fn order_pair<'a>(
    scene: &Scene,
    attrs: AttrSet,
    x: &'a ObjectSpec,
    y: &'a ObjectSpec,
) -> (&'a ObjectSpec, &'a ObjectSpec) {
    let left = &scene.objects[scene.leftmost()];
    let key = Attribute::ORDER_PRIORITY
        .into_iter()
        .find(|a| attrs.contains(*a))
        .expect("nonempty attribute set");
    if y.get(key) == left.get(key) && x.get(key) != left.get(key) {
        (y, x)
    } else {
        (x, y)
    }
}

fn describe_pair(scene: &Scene, attrs: AttrSet, x: &ObjectSpec, y: &ObjectSpec) -> Result<String> {
    let (first, second) = order_pair(scene, attrs, x, y);
    Ok(join_pair(&describe(first, attrs)?, &describe(second, attrs)?))
}

/// Builds one binary example. Returns [`Error::NoDistractor`] when the
/// scene cannot support the task; callers resample.
pub fn make_binary_example<R: Rng + ?Sized>(
    scene: &Scene,
    task: &TaskKind,
    rng: &mut R,
) -> Result<BinaryExample> {
    task.validate()?;
    scene.validate()?;
    if task.needs_distinct_sizes() && scene.objects[0].size == scene.objects[1].size {
        return Err(Error::NoDistractor("size task on a scene with equal sizes".into()));
    }
    let attrs = task.attributes();
    let (positive, negative) = match *task {
        TaskKind::Control { attr } => {
            let pick = rng.random_range(0..2);
            let obj = &scene.objects[pick];
            let absent: Vec<&&str> = attr
                .vocabulary()
                .iter()
                .filter(|v| !scene.has_value(attr, v))
                .collect();
            let Some(&&value) = absent.choose(rng) else {
                return Err(Error::NoDistractor(format!("every {attr} value is present in the scene")));
            };
            let mut distractor = obj.clone();
            distractor.set(attr, value);
            (describe(obj, attrs)?, describe(&distractor, attrs)?)
        }
        TaskKind::Binding { target, .. } => {
            let pick = rng.random_range(0..2);
            let (obj, other) = (&scene.objects[pick], &scene.objects[1 - pick]);
            if obj.get(target) == other.get(target) {
                return Err(Error::NoDistractor(format!("both objects share {target}")));
            }
            let mut distractor = obj.clone();
            distractor.set(target, other.get(target));
            (describe(obj, attrs)?, describe(&distractor, attrs)?)
        }
        TaskKind::Pair { first, .. } => {
            let [a, b] = &scene.objects;
            if a.get(first) == b.get(first) {
                return Err(Error::NoDistractor(format!("both objects share {first}")));
            }
            let (mut sa, mut sb) = (a.clone(), b.clone());
            sa.set(first, b.get(first));
            sb.set(first, a.get(first));
            (describe_pair(scene, attrs, a, b)?, describe_pair(scene, attrs, &sa, &sb)?)
        }
    };
    if positive == negative {
        return Err(Error::NoDistractor("distractor equals the positive prompt".into()));
    }
    Ok(BinaryExample {
        scene: scene.clone(),
        positive,
        negative,
        task: task.to_string(),
    })
}

/// Generates `n` examples from the binding stream of `seed`, resampling
/// scenes that cannot support the task. With `fixed_scene`, every example
/// uses that scene.
pub fn generate_examples(
    task: &TaskKind,
    n: usize,
    seed: u64,
    fixed_scene: Option<&Scene>,
) -> Result<Vec<BinaryExample>> {
    const MAX_CONSECUTIVE_SKIPS: usize = 1000;
    task.validate()?;
    let mut rng = stream_rng(seed, Stream::Binding, 0);
    let mut out = Vec::with_capacity(n);
    let mut skips = 0;
    while out.len() < n {
        let scene = match fixed_scene {
            Some(s) => s.clone(),
            None => Scene::random(&mut rng, task.needs_distinct_sizes()),
        };
        match make_binary_example(&scene, task, &mut rng) {
            Ok(ex) => {
                out.push(ex);
                skips = 0;
            }
            Err(Error::NoDistractor(why)) => {
                skips += 1;
                if skips >= MAX_CONSECUTIVE_SKIPS {
                    return Err(Error::NoDistractor(format!("task {task}: {why}")));
                }
            }
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// An object as recovered from a prompt; unmentioned attributes are `None`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DescribedObject {
    pub shape: Option<String>,
    pub color: Option<String>,
    pub size: Option<String>,
    pub position: Option<String>,
}

impl DescribedObject {
    fn slot(&mut self, attr: Attribute) -> &mut Option<String> {
        match attr {
            Attribute::Shape => &mut self.shape,
            Attribute::Color => &mut self.color,
            Attribute::Size => &mut self.size,
            Attribute::Position => &mut self.position,
        }
    }

    pub fn get(&self, attr: Attribute) -> Option<&str> {
        match attr {
            Attribute::Shape => self.shape.as_deref(),
            Attribute::Color => self.color.as_deref(),
            Attribute::Size => self.size.as_deref(),
            Attribute::Position => self.position.as_deref(),
        }
    }

    /// Every mentioned attribute value, in a fixed order.
    pub fn words(&self) -> impl Iterator<Item = &str> {
        Attribute::ALL.into_iter().filter_map(|a| self.get(a))
    }
}

fn parse_clause(clause: &str) -> Result<DescribedObject> {
    let bad = || Error::Parse(format!("clause {clause:?} does not follow the description template"));
    let mut obj = DescribedObject {
        shape: None,
        color: None,
        size: None,
        position: None,
    };
    let rest = if let Some(r) = clause.strip_prefix("On the ").or_else(|| clause.strip_prefix("on the ")) {
        let (pos, r) = r.split_once(" is a ").ok_or_else(bad)?;
        if !POSITIONS.contains(&pos) {
            return Err(bad());
        }
        obj.position = Some(pos.to_string());
        r
    } else {
        clause
            .strip_prefix("A ")
            .or_else(|| clause.strip_prefix("a "))
            .ok_or_else(bad)?
    };
    let words: Vec<&str> = rest.split(' ').collect();
    let (last, modifiers) = words.split_last().ok_or_else(bad)?;
    let mut expected = [Attribute::Size, Attribute::Color].into_iter().peekable();
    for w in modifiers {
        let attr = Attribute::of_word(w).ok_or_else(bad)?;
        // modifiers appear as size then color, each at most once
        loop {
            match expected.next() {
                Some(a) if a == attr => break,
                Some(_) => continue,
                None => return Err(bad()),
            }
        }
        *obj.slot(attr) = Some(w.to_string());
    }
    if *last != "object" {
        if !SHAPES.contains(last) {
            return Err(bad());
        }
        obj.shape = Some(last.to_string());
    }
    Ok(obj)
}

/// Parses a prompt produced by [`describe`] or a pair join back into its
/// described objects.
pub fn parse_prompt(prompt: &str) -> Result<Vec<DescribedObject>> {
    let body = prompt
        .strip_suffix('.')
        .ok_or_else(|| Error::Parse(format!("prompt {prompt:?} must end with a period")))?;
    body.split(" and ").map(parse_clause).collect()
}

/// True when `prompt` is exactly a template description of the scene under
/// `task`: one object for control and binding tasks, both objects in
/// preference order for pair tasks.
pub fn is_truthful(scene: &Scene, task: &TaskKind, prompt: &str) -> bool {
    let attrs = task.attributes();
    match task {
        TaskKind::Pair { .. } => {
            let [a, b] = &scene.objects;
            describe_pair(scene, attrs, a, b).is_ok_and(|s| s == prompt)
        }
        _ => scene
            .objects
            .iter()
            .any(|o| describe(o, attrs).is_ok_and(|s| s == prompt)),
    }
}

/// True when `negative` differs from `positive` in exactly one attribute
/// slot (control and binding tasks) or by swapping one attribute between
/// the two described objects (pair tasks).
pub fn is_single_difference(task: &TaskKind, positive: &str, negative: &str) -> bool {
    let (Ok(pos), Ok(neg)) = (parse_prompt(positive), parse_prompt(negative)) else {
        return false;
    };
    match task {
        TaskKind::Pair { first, second } => {
            if pos.len() != 2 || neg.len() != 2 {
                return false;
            }
            let mut neg_sorted = neg.clone();
            neg_sorted.sort();
            [*first, *second].into_iter().any(|attr| {
                let mut swapped = pos.clone();
                let (x, y) = (swapped[0].slot(attr).clone(), swapped[1].slot(attr).clone());
                if x == y {
                    return false;
                }
                *swapped[0].slot(attr) = y;
                *swapped[1].slot(attr) = x;
                swapped.sort();
                swapped == neg_sorted
            })
        }
        _ => {
            if pos.len() != 1 || neg.len() != 1 {
                return false;
            }
            let differing = Attribute::ALL
                .into_iter()
                .filter(|&a| pos[0].get(a) != neg[0].get(a))
                .count();
            differing == 1
        }
    }
}

/// Accuracy of a binary scorer with an exact two-sided binomial test
/// against chance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinaryEvaluation {
    pub n: usize,
    pub correct: usize,
    pub accuracy: f64,
    /// 95% Clopper-Pearson interval.
    pub ci_low: f64,
    pub ci_high: f64,
    pub p_value: f64,
}

/// Exact two-sided binomial test of `k` successes in `n` trials against
/// success probability 1/2.
pub fn binomial_two_sided_p(k: usize, n: usize) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let extreme = k.max(n - k);
    if 2 * extreme == n {
        return 1.0;
    }
    let ln_half_n = n as f64 * 0.5f64.ln();
    let tail: f64 = (extreme..=n)
        .map(|i| (ln_binomial(n as u64, i as u64) + ln_half_n).exp())
        .sum();
    (2.0 * tail).min(1.0)
}

fn clopper_pearson(k: usize, n: usize, alpha: f64) -> (f64, f64) {
    let lo = if k == 0 {
        0.0
    } else {
        Beta::new(k as f64, (n - k + 1) as f64)
            .map(|b| b.inverse_cdf(alpha / 2.0))
            .unwrap_or(0.0)
    };
    let hi = if k == n {
        1.0
    } else {
        Beta::new((k + 1) as f64, (n - k) as f64)
            .map(|b| b.inverse_cdf(1.0 - alpha / 2.0))
            .unwrap_or(1.0)
    };
    (lo, hi)
}

/// Chooses between the positive and negative prompt of an example.
pub trait BinaryScorer {
    /// `true` when the positive prompt wins.
    fn prefers_positive(&self, index: usize, example: &BinaryExample) -> Result<bool>;
}

impl<F: Fn(usize, &BinaryExample) -> Result<bool>> BinaryScorer for F {
    fn prefers_positive(&self, index: usize, example: &BinaryExample) -> Result<bool> {
        self(index, example)
    }
}

/// Fraction of examples where the positive prompt wins.
pub fn evaluate_binary<S: BinaryScorer + ?Sized>(
    examples: &[BinaryExample],
    scorer: &S,
) -> Result<BinaryEvaluation> {
    if examples.is_empty() {
        return Err(contract("evaluation needs at least one example"));
    }
    let mut correct = 0;
    for (i, ex) in examples.iter().enumerate() {
        if scorer.prefers_positive(i, ex)? {
            correct += 1;
        }
    }
    let n = examples.len();
    let (ci_low, ci_high) = clopper_pearson(correct, n, 0.05);
    Ok(BinaryEvaluation {
        n,
        correct,
        accuracy: correct as f64 / n as f64,
        ci_low,
        ci_high,
        p_value: binomial_two_sided_p(correct, n),
    })
}

/// Bag-of-attributes embedding over the full vocabulary.
fn embed_words<'a>(words: impl Iterator<Item = &'a str>) -> Vec<f64> {
    let vocab: Vec<&str> = Attribute::ALL
        .into_iter()
        .flat_map(|a| a.vocabulary().iter().copied())
        .collect();
    let mut v = vec![0.0; vocab.len()];
    for w in words {
        if let Some(i) = vocab.iter().position(|x| *x == w) {
            v[i] += 1.0;
        }
    }
    v
}

/// A planted scorer that runs the classification engine on a bag-of-words
/// world: the scene is observed as its attribute counts plus Gaussian
/// noise, and each prompt's class mean is the counts of the words it
/// mentions. It recognizes attributes but cannot bind them to objects.
#[derive(Debug, Clone)]
pub struct BagOfAttributesScorer {
    pub std: f64,
    pub schedule: NoiseSchedule,
    pub weighting: WeightingSpec,
    pub pruning: PruningConfig,
    pub seed: u64,
}

impl BagOfAttributesScorer {
    pub fn new(seed: u64) -> Self {
        Self {
            std: 0.5,
            schedule: NoiseSchedule::Cosine,
            weighting: WeightingSpec::default(),
            pruning: PruningConfig::default(),
            seed,
        }
    }
}

impl BinaryScorer for BagOfAttributesScorer {
    fn prefers_positive(&self, index: usize, example: &BinaryExample) -> Result<bool> {
        use rand_distr::StandardNormal;
        let mut rng: EpisodeRng = crate::rng::episode_rng(self.seed, index as u64);
        let scene_words = example.scene.objects.iter().flat_map(|o| Attribute::ALL.map(|a| o.get(a)));
        let x0: Vec<f64> = embed_words(scene_words)
            .into_iter()
            .map(|v| v + self.std * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let mean_of = |prompt: &str| -> Result<Vec<f64>> {
            let objs = parse_prompt(prompt)?;
            Ok(embed_words(objs.iter().flat_map(|o| o.words())))
        };
        // Randomize which prompt holds class 0 so ties do not favor either side.
        let positive_first = rng.random::<bool>();
        let (m0, m1) = if positive_first {
            (mean_of(&example.positive)?, mean_of(&example.negative)?)
        } else {
            (mean_of(&example.negative)?, mean_of(&example.positive)?)
        };
        let world = GaussianWorld::new(self.std, vec![m0, m1], self.seed)?;
        let (p0, p1) = if positive_first {
            (&example.positive, &example.negative)
        } else {
            (&example.negative, &example.positive)
        };
        let labels = [Condition::new(0, p0.clone())?, Condition::new(1, p1.clone())?];
        let engine = Engine::new(world.denoiser(self.schedule), self.schedule, &self.weighting);
        let pred = engine.classify_pruned(&x0, &labels, &self.pruning, &mut rng)?.prediction;
        Ok((pred.class_id == 0) == positive_first)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn task(s: &str) -> TaskKind {
        s.parse().unwrap()
    }

    #[test]
    fn describe_templates() {
        let scene = Scene::reference();
        let [sphere, cube] = &scene.objects;
        let cs = AttrSet::of(&[Attribute::Color, Attribute::Shape]);
        assert_eq!(describe(sphere, cs).unwrap(), "A yellow sphere.");
        let pc = AttrSet::of(&[Attribute::Position, Attribute::Color]);
        assert_eq!(describe(cube, pc).unwrap(), "On the right is a gray object.");
        let ss = AttrSet::of(&[Attribute::Size, Attribute::Shape]);
        assert_eq!(describe(cube, ss).unwrap(), "A large cube.");
        let all = AttrSet::of(&Attribute::ALL);
        assert_eq!(describe(sphere, all).unwrap(), "On the left is a small yellow sphere.");
        assert!(describe(sphere, AttrSet::default()).is_err());
    }

    #[test]
    fn task_parsing() {
        assert_eq!(task("Color|Shape"), TaskKind::Binding { target: Attribute::Color, given: Attribute::Shape });
        assert_eq!(task("shape,size"), TaskKind::Pair { first: Attribute::Shape, second: Attribute::Size });
        assert_eq!(task("Shape"), TaskKind::Control { attr: Attribute::Shape });
        assert_eq!(task("Color|Position").to_string(), "Color|Position");
        for bad in ["Size|Size", "Shape,Shape", "Texture", "Color|", "Position", "Size"] {
            let err = bad.parse::<TaskKind>().unwrap_err().to_string();
            assert!(err.contains("Valid kinds"), "{bad}: {err}");
        }
    }

    #[test]
    fn control_shape_distractor_is_the_missing_shape() {
        let scene = Scene::reference();
        let mut rng = stream_rng(0, Stream::Binding, 0);
        for _ in 0..50 {
            let ex = make_binary_example(&scene, &task("Shape"), &mut rng).unwrap();
            assert_eq!(ex.negative, "A cylinder.");
            assert!(ex.positive == "A sphere." || ex.positive == "A cube.");
        }
    }

    #[test]
    fn pair_examples_follow_ordering_preference() {
        let scene = Scene::reference();
        let mut rng = stream_rng(0, Stream::Binding, 0);
        let ex = make_binary_example(&scene, &task("Shape,Size"), &mut rng).unwrap();
        assert_eq!(ex.positive, "A small sphere and a large cube.");
        assert_eq!(ex.negative, "A large sphere and a small cube.");
        let ex = make_binary_example(&scene, &task("Color,Size"), &mut rng).unwrap();
        assert_eq!(ex.positive, "A small yellow object and a large gray object.");
        assert_eq!(ex.negative, "A large yellow object and a small gray object.");
        let ex = make_binary_example(&scene, &task("Position,Color"), &mut rng).unwrap();
        assert_eq!(ex.positive, "On the left is a yellow object and on the right is a gray object.");
        assert_eq!(ex.negative, "On the left is a gray object and on the right is a yellow object.");
    }

    #[test]
    fn size_tasks_reject_equal_sizes() {
        let scene = Scene::new(
            ObjectSpec::new("sphere", "red", "small", "left").unwrap(),
            ObjectSpec::new("cube", "blue", "small", "right").unwrap(),
        )
        .unwrap();
        let mut rng = stream_rng(0, Stream::Binding, 0);
        assert!(matches!(
            make_binary_example(&scene, &task("Size|Shape"), &mut rng),
            Err(Error::NoDistractor(_))
        ));
    }

    #[test]
    fn scene_validation() {
        assert!(Scene::new(
            ObjectSpec::new("cube", "red", "small", "left").unwrap(),
            ObjectSpec::new("cube", "blue", "small", "right").unwrap()
        )
        .is_err());
        assert!(ObjectSpec::new("cone", "red", "small", "left").is_err());
    }

    #[test]
    fn parse_round_trip() {
        let objs = parse_prompt("On the left is a small yellow sphere and on the right is a large gray cube.").unwrap();
        assert_eq!(objs.len(), 2);
        assert_eq!(objs[1].get(Attribute::Shape), Some("cube"));
        assert_eq!(objs[0].get(Attribute::Size), Some("small"));
        assert!(parse_prompt("A yellow small sphere.").is_err());
        assert!(parse_prompt("A sphere").is_err());
        assert!(parse_prompt("The sphere.").is_err());
        assert!(parse_prompt("A cone.").is_err());
    }

    #[test]
    fn binomial_p_values() {
        assert!((binomial_two_sided_p(8, 8) - 2.0 * 0.5f64.powi(8)).abs() < 1e-15);
        assert_eq!(binomial_two_sided_p(5, 10), 1.0);
        let p = binomial_two_sided_p(540, 1000);
        assert!((p - 0.0124).abs() < 5e-4 && p > 0.01, "{p}");
        assert_eq!(binomial_two_sided_p(460, 1000), p);
    }

    #[test]
    fn degenerate_scorers() {
        let examples = generate_examples(&task("Color|Shape"), 8, 3, None).unwrap();
        let always = |_: usize, _: &BinaryExample| Ok(true);
        let ev = evaluate_binary(&examples, &always).unwrap();
        assert_eq!(ev.accuracy, 1.0);
        assert!(ev.p_value < 0.01);
        assert_eq!(ev.ci_high, 1.0);
        assert!(evaluate_binary(&[], &always).is_err());
    }

    #[test]
    fn bag_of_attributes_scorer_recognizes_but_cannot_bind() {
        let scorer = BagOfAttributesScorer::new(1);
        let control = generate_examples(&task("Color"), 200, 1, None).unwrap();
        assert!(evaluate_binary(&control, &scorer).unwrap().accuracy > 0.9);
        let binding = generate_examples(&task("Color|Shape"), 200, 1, None).unwrap();
        let acc = evaluate_binary(&binding, &scorer).unwrap().accuracy;
        assert!((0.35..0.65).contains(&acc), "{acc}");
    }
}
