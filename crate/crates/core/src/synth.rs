//! Seeded synthetic HPSG lexica for tests and benchmarks.
//!
//! Verbs come in families (a canonical perfect form plus suffixed inflected
//! forms), denuded or derived, occasionally as vocalization homographs or
//! without their canonical form. Nouns span several NATURE values with
//! definite, dual, plural, diminutive and relative forms. Particles use
//! either the preposition model (COMPS) or the tool model (SPEC, RESTIND).
//! Every PHON value is unique and every feature is registered.

use std::collections::HashSet;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::fs::{serialize_lexicon, FeatureStructure, FeatureValue};

const FATHA: char = '\u{064E}';
const DAMMA: char = '\u{064F}';
const KASRA: char = '\u{0650}';
const SHADDA: char = '\u{0651}';
const SUKUN: char = '\u{0652}';

const CONSONANTS: &[char] = &[
    'ب', 'ت', 'ث', 'ج', 'ح', 'خ', 'د', 'ذ', 'ر', 'ز', 'س', 'ش', 'ص', 'ض', 'ط', 'ظ', 'ع', 'غ',
    'ف', 'ق', 'ك', 'ل', 'م', 'ن', 'ه',
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SynthCounts {
    pub verbs: usize,
    pub nouns: usize,
    pub particles: usize,
}

impl SynthCounts {
    pub fn new(verbs: usize, nouns: usize, particles: usize) -> Self {
        SynthCounts {
            verbs,
            nouns,
            particles,
        }
    }
}

type Root = [char; 3];

#[derive(Clone, Copy)]
enum VerbPattern {
    Denuded(char),
    Af3ala,
    Fa33ala,
    Faa3ala,
    Istaf3ala,
    Tafaa3ala,
}

impl VerbPattern {
    fn perfect(self, [a, b, c]: Root) -> String {
        let s = |parts: &[&dyn ToString]| parts.iter().map(|p| p.to_string()).collect::<String>();
        match self {
            VerbPattern::Denuded(v) => s(&[&a, &FATHA, &b, &v, &c, &FATHA]),
            VerbPattern::Af3ala => s(&[&"أَ", &a, &SUKUN, &b, &FATHA, &c, &FATHA]),
            VerbPattern::Fa33ala => s(&[&a, &FATHA, &b, &SHADDA, &FATHA, &c, &FATHA]),
            VerbPattern::Faa3ala => s(&[&a, &FATHA, &'ا', &b, &FATHA, &c, &FATHA]),
            VerbPattern::Istaf3ala => s(&[&"اِسْتَ", &a, &SUKUN, &b, &FATHA, &c, &FATHA]),
            VerbPattern::Tafaa3ala => s(&[&"تَ", &a, &FATHA, &'ا', &b, &FATHA, &c, &FATHA]),
        }
    }

    fn denuded(self) -> bool {
        matches!(self, VerbPattern::Denuded(_))
    }
}

/// Perfect suffixes replacing the final fatha: (suffix, PERSON, NUMBER).
const VERB_SUFFIXES: &[(&str, &str, &str)] = &[
    ("\u{0652}تُ", "first", "singular"),
    ("\u{0652}نَا", "first", "plural"),
    ("\u{0652}تَ", "second", "singular"),
    ("\u{064F}وا", "third", "plural"),
    ("\u{064E}ا", "third", "dual"),
];

const NATURES: &[&str] = &[
    "masdar",
    "masdar mīmī",
    "ism fāʿil",
    "ism mafʿūl",
    "ṣifa mushabbaha",
    "ism makān",
];

fn noun_form(nature: &str, [a, b, c]: Root) -> String {
    let chars: Vec<char> = match nature {
        "masdar" => vec![a, FATHA, b, SUKUN, c],
        "masdar mīmī" => vec!['م', FATHA, a, SUKUN, b, FATHA, c],
        "ism fāʿil" => vec![a, FATHA, 'ا', b, KASRA, c],
        "ism mafʿūl" => vec!['م', FATHA, a, SUKUN, b, DAMMA, 'و', c],
        "ṣifa mushabbaha" => vec![a, FATHA, b, KASRA, 'ي', c],
        _ => vec!['م', FATHA, a, SUKUN, b, KASRA, c],
    };
    chars.into_iter().collect()
}

fn atom(s: &str) -> FeatureValue {
    FeatureValue::atom(s)
}

fn text(s: &str) -> FeatureValue {
    FeatureValue::text(s)
}

fn avm(features: Vec<(&str, FeatureValue)>) -> FeatureValue {
    let mut fs = FeatureStructure::new();
    for (n, v) in features {
        fs.push(n, v);
    }
    FeatureValue::Avm(fs)
}

fn np(case: &str, label: &str) -> FeatureValue {
    avm(vec![
        ("CAT", atom("NP")),
        ("CASE", atom(case)),
        ("LABEL", atom(label)),
    ])
}

fn entry(phon: &str, head: Vec<(&str, FeatureValue)>, valence: FeatureValue, cont: FeatureValue, tete: bool) -> FeatureStructure {
    let head_name = if tete { "TETE" } else { "HEAD" };
    let body = avm(vec![(
        "LOC",
        avm(vec![
            ("CAT", avm(vec![(head_name, avm(head)), ("VALENCE", valence)])),
            ("CONT", cont),
        ]),
    )]);
    FeatureStructure::new()
        .with("PHON", text(phon))
        .with("SYNSEM", body)
}

struct Generator {
    rng: ChaCha8Rng,
    used_phon: HashSet<String>,
    used_roots: HashSet<Root>,
}

impl Generator {
    fn fresh_root(&mut self) -> Root {
        loop {
            let root = [
                *CONSONANTS.choose(&mut self.rng).unwrap(),
                *CONSONANTS.choose(&mut self.rng).unwrap(),
                *CONSONANTS.choose(&mut self.rng).unwrap(),
            ];
            if self.used_roots.len() >= CONSONANTS.len().pow(3) || self.used_roots.insert(root) {
                return root;
            }
        }
    }

    /// Reserves `phon`; false when it is already taken.
    fn claim(&mut self, phon: &str) -> bool {
        self.used_phon.insert(phon.to_string())
    }

    fn verb_family(&mut self, budget: usize, out: &mut Vec<FeatureStructure>) {
        let root = self.fresh_root();
        let radical: String = root.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(" ");
        let denuded_vowels = [FATHA, KASRA, DAMMA];
        let pattern = match self.rng.random_range(0..10) {
            0..=5 => VerbPattern::Denuded(*denuded_vowels.choose(&mut self.rng).unwrap()),
            6 => VerbPattern::Af3ala,
            7 => VerbPattern::Fa33ala,
            8 => VerbPattern::Faa3ala,
            _ => *[VerbPattern::Istaf3ala, VerbPattern::Tafaa3ala]
                .choose(&mut self.rng)
                .unwrap(),
        };
        if self.rng.random_bool(0.05) {
            // frozen verb: a single non-inflecting entry
            let phon = pattern.perfect(root);
            if self.claim(&phon) {
                out.push(entry(
                    &phon,
                    vec![
                        ("MAJ", atom("verbe")),
                        ("VFORM", atom("jāmid")),
                        ("RADICAL", text(&radical)),
                        ("TENSE", atom("perfect")),
                    ],
                    avm(vec![("SUJ", FeatureValue::List(vec![np("nominative", "X")]))]),
                    avm(vec![("NUCLEUS", avm(vec![("AGENT-NOUN", avm(vec![("LABEL", atom("X"))]))]))]),
                    false,
                ));
            }
            return;
        }
        let mut families = vec![pattern];
        if let VerbPattern::Denuded(v) = pattern {
            if self.rng.random_bool(0.1) {
                let other = *denuded_vowels.iter().find(|o| **o != v).unwrap();
                families.push(VerbPattern::Denuded(other));
            }
        }
        let homographs = families.len() > 1;
        let mut left = budget;
        for pattern in families {
            if left == 0 {
                break;
            }
            let written = self.verb_forms(root, &radical, pattern, homographs, left);
            left -= written.len();
            out.extend(written);
        }
    }

    fn verb_forms(
        &mut self,
        root: Root,
        radical: &str,
        pattern: VerbPattern,
        homographs: bool,
        budget: usize,
    ) -> Vec<FeatureStructure> {
        let lemma = pattern.perfect(root);
        let scheme_root = ['ف', 'ع', 'ل'];
        let scheme = pattern.perfect(scheme_root);
        let transitive = self.rng.random_bool(0.6);
        let label_lemma = homographs || self.rng.random_bool(0.3);
        let with_canonical = !self.rng.random_bool(0.05);
        let tete = self.rng.random_bool(0.2);
        let n_inflected = self.rng.random_range(0..=4);

        let valence = || {
            let comps = if transitive {
                vec![np("accusative", "Y")]
            } else {
                Vec::new()
            };
            avm(vec![
                ("SUJ", FeatureValue::List(vec![np("nominative", "X")])),
                ("COMPS", FeatureValue::List(comps)),
            ])
        };
        let cont = || {
            let mut roles = vec![("AGENT-NOUN", avm(vec![("LABEL", atom("X"))]))];
            if transitive {
                roles.push(("PATIENT-NOUN", avm(vec![("LABEL", atom("Y"))])));
            }
            avm(vec![("NUCLEUS", avm(roles))])
        };
        let head = |scheme: &str, person: &str, number: &str, lemma_label: Option<&str>| {
            let mut h = vec![
                ("MAJ", atom("verbe")),
                ("VFORM", atom("mutaṣṣarf")),
                ("CFORM", atom("thulāthī")),
                ("DENUDE", atom(if pattern.denuded() { "mujarrid" } else { "mazīd" })),
                ("RADICAL", text(radical)),
                ("SCHEME", text(scheme)),
                ("TENSE", atom("perfect")),
                ("PERSON", atom(person)),
                ("NUMBER", atom(number)),
                ("VOICE", atom("active")),
            ];
            if let Some(l) = lemma_label {
                h.push(("LEMMA", text(l)));
            }
            h
        };

        let mut out = Vec::new();
        if with_canonical && self.claim(&lemma) {
            out.push(entry(&lemma, head(&scheme, "third", "singular", None), valence(), cont(), tete));
        }
        let stem = lemma.trim_end_matches(FATHA).to_string();
        let scheme_stem = scheme.trim_end_matches(FATHA).to_string();
        let mut suffixes: Vec<&(&str, &str, &str)> = VERB_SUFFIXES.iter().collect();
        suffixes.sort_by_key(|_| self.rng.random::<u32>());
        for (suffix, person, number) in suffixes.into_iter().take(n_inflected) {
            if out.len() >= budget {
                break;
            }
            let phon = format!("{stem}{suffix}");
            if !self.claim(&phon) {
                continue;
            }
            let label = label_lemma.then_some(lemma.as_str());
            out.push(entry(
                &phon,
                head(&format!("{scheme_stem}{suffix}"), person, number, label),
                valence(),
                cont(),
                tete,
            ));
        }
        out.truncate(budget);
        out
    }

    fn noun_family(&mut self, budget: usize, out: &mut Vec<FeatureStructure>) {
        let root = self.fresh_root();
        let radical: String = root.iter().collect();
        let nature = *NATURES.choose(&mut self.rng).unwrap();
        let nform = match self.rng.random_range(0..20) {
            0 => "ghair mutaṣṣarf",
            1..=3 => "mutaṣṣarf jāmed",
            _ => "mutaṣṣarf muchtak",
        };
        let lemma = noun_form(nature, root);
        let label_lemma = self.rng.random_bool(0.3);
        let gender = if self.rng.random_bool(0.7) { "masculine" } else { "feminine" };
        let adjective = nature == "ṣifa mushabbaha";

        let head = |defn: &str, number: &str, diminutive: &str, relative: &str, lemma_label: Option<&str>| {
            let mut h = vec![
                ("MAJ", atom("nom")),
                ("NFORM", atom(nform)),
                ("NATURE", atom(nature)),
                ("RADICAL", text(&radical)),
                ("CFORM", atom("thulāthī")),
                ("DEFN", atom(defn)),
                ("NUMBER", atom(number)),
                ("GENR", atom(gender)),
                ("DIMINUTIVE", atom(diminutive)),
                ("RELATIVE", atom(relative)),
                ("CASE", atom("nominative")),
            ];
            if let Some(l) = lemma_label {
                h.push(("LEMMA", text(l)));
            }
            h
        };
        let valence = || {
            if adjective {
                avm(vec![("MOD", FeatureValue::List(vec![avm(vec![("CAT", atom("N"))])]))])
            } else {
                avm(vec![("SPR", FeatureValue::List(vec![avm(vec![("CAT", atom("DET"))])]))])
            }
        };
        let cont = || avm(vec![("NUCLEUS", FeatureValue::List(Vec::new()))]);

        let plain = ("ghair muṣaḡḡar", "ghair manṣūb");
        let limit = out.len() + budget;
        if self.claim(&lemma) {
            out.push(entry(
                &lemma,
                head("indefinite", "singular", plain.0, plain.1, None),
                valence(),
                cont(),
                false,
            ));
        }
        if nform == "ghair mutaṣṣarf" {
            return;
        }
        let [a, b, c] = root;
        let variants: Vec<(String, &str, &str, &str, &str)> = vec![
            (format!("ال{lemma}"), "definite", "singular", plain.0, plain.1),
            (format!("{lemma}{FATHA}انِ"), "indefinite", "dual", plain.0, plain.1),
            (format!("{lemma}{FATHA}ات"), "indefinite", "plural", plain.0, plain.1),
            (
                [a, DAMMA, b, FATHA, 'ي', SUKUN, c].iter().collect(),
                "indefinite",
                "singular",
                "ṣīghat al-ttaṣḡīr",
                plain.1,
            ),
            (format!("{lemma}{KASRA}ي{SHADDA}"), "indefinite", "singular", plain.0, "manṣūb"),
        ];
        let n = self.rng.random_range(0..=3);
        let mut picks: Vec<usize> = (0..variants.len()).collect();
        picks.sort_by_key(|_| self.rng.random::<u32>());
        for i in picks.into_iter().take(n) {
            if out.len() >= limit {
                break;
            }
            let (phon, defn, number, dim, rel) = &variants[i];
            if !self.claim(phon) {
                continue;
            }
            let label = label_lemma.then_some(lemma.as_str());
            out.push(entry(phon, head(defn, number, dim, rel, label), valence(), cont(), false));
        }
    }

    fn particle(&mut self) -> FeatureStructure {
        let phon = loop {
            let len = self.rng.random_range(1..=3);
            let mut s = String::new();
            for _ in 0..len {
                s.push(*CONSONANTS.choose(&mut self.rng).unwrap());
                s.push(*[FATHA, KASRA, DAMMA, SUKUN].choose(&mut self.rng).unwrap());
            }
            if self.claim(&s) {
                break s;
            }
        };
        if self.rng.random_bool(0.5) {
            entry(
                &phon,
                vec![("MAJ", atom("preposition")), ("NATURE", atom("ḥarf jarr"))],
                avm(vec![("COMPS", FeatureValue::List(vec![avm(vec![
                    ("CAT", atom("NP")),
                    ("CASE", atom("genitive")),
                ])]))]),
                avm(vec![]),
                false,
            )
        } else {
            entry(
                &phon,
                vec![("MAJ", atom("particle")), ("NATURE", atom("ḥarf naṣb"))],
                avm(vec![("SPEC", avm(vec![("CAT", atom("V")), ("MOOD", atom("subjunctive"))]))]),
                avm(vec![("RESTIND", atom("nafy al-mustaqbal"))]),
                false,
            )
        }
    }
}

/// Entries of a deterministic synthetic lexicon, in document order.
pub fn generate_entries(seed: u64, counts: SynthCounts) -> Vec<FeatureStructure> {
    let mut g = Generator {
        rng: ChaCha8Rng::seed_from_u64(seed),
        used_phon: HashSet::new(),
        used_roots: HashSet::new(),
    };
    let mut verbs = Vec::new();
    while verbs.len() < counts.verbs {
        let left = counts.verbs - verbs.len();
        g.verb_family(left, &mut verbs);
    }
    let mut nouns = Vec::new();
    while nouns.len() < counts.nouns {
        let left = counts.nouns - nouns.len();
        g.noun_family(left, &mut nouns);
    }
    let particles: Vec<_> = (0..counts.particles).map(|_| g.particle()).collect();
    let mut all: Vec<FeatureStructure> = verbs.into_iter().chain(nouns).chain(particles).collect();
    // interleave so families are not contiguous
    for i in (1..all.len()).rev() {
        let j = g.rng.random_range(0..=i);
        all.swap(i, j);
    }
    all
}

/// A deterministic synthetic lexicon document.
pub fn generate_synthetic_lexicon(seed: u64, counts: SynthCounts) -> Vec<u8> {
    serialize_lexicon(&generate_entries(seed, counts))
}
