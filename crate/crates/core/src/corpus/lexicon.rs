//! Built-in lexicons and sentence templates for the synthetic benchmark.
//!
//! The adverse-event lexicon is shared by every silo (frequencies differ per
//! silo through a Zipf skew); vaccine brand names are partitioned so that no
//! name ever appears in two silos. Template placeholders: `{ae}` an
//! adverse-event span (labeled B I..), `{vx}` a silo vaccine name, `{f}` a
//! filler word (both labeled O).

/// Shared adverse-event phrases; every span is 1 to 4 tokens.
pub const ADVERSE_EVENTS: &[&str] = &[
    // single token
    "fever",
    "chills",
    "headache",
    "nausea",
    "dizziness",
    "fatigue",
    "rash",
    "vomiting",
    "hives",
    "syncope",
    "pruritus",
    "urticaria",
    "erythema",
    "myalgia",
    "malaise",
    "numbness",
    "tingling",
    "drowsiness",
    "irritability",
    "cellulitis",
    "wheezing",
    "palpitations",
    // two tokens
    "sore arm",
    "joint pain",
    "muscle pain",
    "chest pain",
    "neck spasms",
    "facial swelling",
    "throat tightness",
    "blurred vision",
    "night sweats",
    "dry cough",
    "shoulder soreness",
    "leg cramps",
    "ear ringing",
    "stomach cramps",
    "skin redness",
    "hot flashes",
    "cold sweats",
    "deep aches",
    "reduced appetite",
    "sleep disturbance",
    // three tokens
    "injection site swelling",
    "injection site redness",
    "injection site bruising",
    "injection site warmth",
    "loss of taste",
    "loss of smell",
    "burning at site",
    "severe back spasms",
    "mild allergic reaction",
    "rapid heart rate",
    "low blood pressure",
    "swollen lymph nodes",
    // four tokens
    "cramping in both legs",
    "stabbing pain behind eyes",
    "itching all over torso",
    "tenderness around the site",
    "stiffness in the shoulders",
    "heaviness in the ribs",
];

/// Vaccine brand names, three per silo, pairwise disjoint across silos.
pub const VACCINE_NAMES: &[[&str; 3]] = &[
    ["veltrix", "cormivar", "zelvona"],
    ["adenoral", "bexivane", "lumorix"],
    ["quantavel", "sorivax", "tremelin"],
    ["ulvarine", "vexodral", "wistavel"],
    ["xanovair", "yelvorin", "zutravel"],
    ["arvelox", "brimavax", "celdorin"],
    ["dravonel", "elvarix", "fentoval"],
    ["gravonex", "hilvarin", "imventra"],
    ["jorvalin", "kelvonar", "lentravix"],
    ["morvalex", "nextravin", "olvarine"],
];

/// Filler vocabulary drawn by `{f}` slots.
pub const FILLER_WORDS: &[&str] = &[
    "left", "right", "upper", "lower", "first", "second", "third", "initial", "final", "routine",
    "annual", "regular", "scheduled", "standard", "normal", "ordinary", "typical", "usual",
    "recent", "previous", "earlier", "later", "morning", "afternoon", "evening", "overnight",
    "daily", "weekly", "monthly", "seasonal", "local", "nearby", "outpatient", "inpatient",
    "primary", "secondary", "general", "family", "pediatric", "geriatric", "community",
    "regional", "county", "district", "downtown", "suburban", "rural", "urban", "mobile",
    "temporary", "permanent", "brief", "short", "long", "extended", "gradual", "sudden",
    "steady", "slow", "quick", "prompt", "immediate", "delayed", "partial", "complete", "full",
    "total", "minor", "moderate", "slight", "notable", "marked", "visible", "obvious", "vague",
    "unclear", "detailed", "thorough", "careful", "close", "repeat", "additional", "extra",
    "further", "follow", "ongoing", "current", "active", "stable", "improved", "resolved",
    "uneventful", "unremarkable", "satisfactory", "favorable", "good", "fair", "excellent",
    "adequate", "sufficient", "proper", "correct", "appropriate", "suitable", "documented",
    "recorded", "reported", "written", "verbal", "telephone", "electronic", "paper", "office",
    "clinic", "hospital", "pharmacy", "practice", "department", "unit", "ward", "bay", "room",
    "station", "center", "facility", "reception", "location", "visit", "appointment", "checkup",
    "exam", "screening", "consult", "review", "assessment", "interview", "questionnaire",
    "form", "chart", "record", "file", "note", "letter", "summary", "history", "profile",
    "schedule", "calendar", "protocol", "guideline", "procedure", "process", "course", "series",
    "program", "plan", "regimen", "dose", "booster", "batch", "lot", "vial", "syringe",
    "needle", "bandage", "plaster", "swab", "gauze", "thigh", "deltoid", "forearm", "waiting",
    "hip", "knee", "ankle", "wrist", "elbow", "spine", "calf", "toddler", "infant", "child",
    "teen", "adult", "senior", "veteran", "worker", "teacher", "student", "farmer", "driver",
    "nurse", "resident", "technician", "assistant", "volunteer", "caregiver", "parent",
    "guardian", "spouse", "sibling", "neighbor", "coworker", "friend", "two", "three", "four",
    "five", "six", "seven", "eight", "nine", "ten", "eleven", "twelve", "fourteen", "twenty",
    "thirty", "several", "couple", "few", "many",
];

/// Sentence templates; `ae_slots` sentences are drawn so that entities occur
/// at the documented corpus-wide density.
pub const TEMPLATES: &[&str] = &[
    // no adverse event
    "patient received {vx} vaccine in the {f} arm",
    "the {f} dose of {vx} was administered without incident",
    "patient denies any {f} complaints since vaccination",
    "follow up {f} visit showed recovery after {vx}",
    "no adverse event was reported after {vx}",
    "patient felt {f} well after the {vx} injection",
    "the nurse administered {vx} per {f} protocol",
    "vaccination with {vx} was completed at the {f} clinic",
    "patient returned to {f} activities the next day",
    "medical history includes {f} conditions unrelated to {vx}",
    "the {f} area looked clean after {vx} administration",
    "patient tolerated the {vx} dose {f} well",
    "records show {vx} was given during the {f} visit",
    "caller requested {f} information about {vx}",
    "patient scheduled a {f} appointment after receiving {vx}",
    "the physician reviewed the {f} chart before giving {vx}",
    "no new symptoms were noted at the {f} exam",
    // one adverse event
    "patient reported {ae} after receiving {vx}",
    "she developed {ae} within hours of the {vx} dose",
    "he experienced {ae} following {vx} vaccination",
    "the report describes {ae} after the {f} dose of {vx}",
    "onset of {ae} occurred {f} days after {vx}",
    "patient called complaining of {ae} since the {vx} shot",
    "examination revealed {ae} at the {f} visit",
    "symptoms included {ae} lasting {f} days",
    "mother stated the child had {ae} after {vx}",
    "patient presented with {ae} requiring {f} care",
    // two adverse events
    "patient reported {ae} and {ae} after {vx}",
    "symptoms of {ae} with {ae} began after the {vx} dose",
    "she experienced {ae} followed by {ae} since receiving {vx}",
];

/// Probability of a sentence containing 0, 1 or 2 entities. The expected
/// density is 0.45 entities per sentence, mirroring the benchmark corpus
/// shape.
pub const ENTITY_COUNT_WEIGHTS: [f64; 3] = [0.59, 0.37, 0.04];

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn adverse_event_spans_are_one_to_four_tokens() {
        for phrase in ADVERSE_EVENTS {
            let n = phrase.split_whitespace().count();
            assert!((1..=4).contains(&n), "{phrase:?} has {n} tokens");
        }
    }

    #[test]
    fn vaccine_names_are_disjoint_across_silos() {
        let mut seen = HashSet::new();
        for group in VACCINE_NAMES {
            for name in group {
                assert!(seen.insert(*name), "{name} appears in two silos");
            }
        }
    }

    #[test]
    fn filler_never_collides_with_entity_or_vaccine_tokens() {
        let ae_tokens: HashSet<&str> = ADVERSE_EVENTS
            .iter()
            .flat_map(|p| p.split_whitespace())
            .collect();
        let vx: HashSet<&str> = VACCINE_NAMES.iter().flatten().copied().collect();
        for word in FILLER_WORDS {
            assert!(!ae_tokens.contains(word), "filler {word} is an entity token");
            assert!(!vx.contains(word), "filler {word} is a vaccine name");
        }
    }

    #[test]
    fn templates_parse_and_cover_all_slot_counts() {
        let mut by_count = [0usize; 3];
        for template in TEMPLATES {
            let ae = template.matches("{ae}").count();
            assert!(ae <= 2);
            by_count[ae] += 1;
        }
        assert!(by_count.iter().all(|&c| c > 0));
        assert_eq!(by_count.iter().sum::<usize>(), TEMPLATES.len());
    }
}
