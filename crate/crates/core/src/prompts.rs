//! Prompt templates shipped with the crate. Slots are written `{{name}}`.

use sha2::{Digest, Sha256};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Template {
    pub name: &'static str,
    pub text: &'static str,
}

macro_rules! template {
    ($ident:ident, $file:literal) => {
        pub const $ident: Template = Template {
            name: $file,
            text: include_str!(concat!("../templates/", $file)),
        };
    };
}

template!(GUIDE_SLOW, "guide_slow.txt");
template!(GUIDE_FAST, "guide_fast.txt");
template!(INTENTION, "ir.txt");
template!(ASSESS_FULL, "ca_full.txt");
template!(ASSESS_ROUND2, "ca_round2.txt");
template!(ASSESS_ROUND3, "ca_round3.txt");
template!(SMOA_ROUND4, "smoa_round4.txt");
template!(ASSESS_CASUAL, "ca_casual.txt");
template!(FAST_MIND, "fast_mind.txt");
template!(FMOA, "fmoa.txt");
template!(FMOA_CHAT_ACTIVE, "fmoa_chat_active.txt");
template!(FMOA_CHAT_IDLE, "fmoa_chat_idle.txt");
template!(NEA, "nea.txt");
template!(ONE_STAGE, "one_stage.txt");

pub const ALL: [Template; 14] = [
    GUIDE_SLOW,
    GUIDE_FAST,
    INTENTION,
    ASSESS_FULL,
    ASSESS_ROUND2,
    ASSESS_ROUND3,
    SMOA_ROUND4,
    ASSESS_CASUAL,
    FAST_MIND,
    FMOA,
    FMOA_CHAT_ACTIVE,
    FMOA_CHAT_IDLE,
    NEA,
    ONE_STAGE,
];

pub const MACRO_RULE: &str = "All available actions are: Chop Tomato, Chop Lettuce, Chop Onion, Prepare Alice Ingredients, Prepare Bob Ingredients, Prepare Cathy Ingredients, Prepare David Ingredients, Putout, Cook Alice Soup, Cook Bob Soup, Cook Cathy Soup, Cook David Soup, Plate Alice Soup, Plate Bob Soup, Plate Cathy Soup, Plate David Soup, Serve Alice Soup, Serve Bob Soup, Serve Cathy Soup, Serve David Soup, Drop.";

pub const MOVE_RULE: &str = "All available actions are: left, right, up, down, which will change your location by (-1, 0), (1, 0), (0, 1) and (0, -1) respectively. When you stand next to a grid, you can move towards it to interactive with it, for example, pick up things from table or cook a soup.";

/// Marker between the rounds of a multi-round conversation.
pub const ROUND_MARK: &str = "\nOutput: ";

impl Template {
    /// Fills every `{{slot}}`. The trailing newline of the file is dropped so
    /// prefixes such as "My actions are: " keep their final space.
    pub fn render(&self, slots: &[(&str, &str)]) -> String {
        let mut out = self.text.strip_suffix('\n').unwrap_or(self.text).to_string();
        for (key, value) in slots {
            out = out.replace(&format!("{{{{{key}}}}}"), value);
        }
        debug_assert!(!out.contains("{{"), "unfilled slot in {}", self.name);
        out
    }

    /// Content address, so recorded calls can be tied to template versions.
    pub fn digest(&self) -> String {
        let d = Sha256::digest(self.text.as_bytes());
        d.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

pub fn guide_slow() -> String {
    GUIDE_SLOW.render(&[])
}

pub fn guide_fast(macros: bool) -> String {
    GUIDE_FAST.render(&[("rule_actions", if macros { MACRO_RULE } else { MOVE_RULE })])
}

/// Appends a finished round's reply and the next instruction.
pub fn next_round(conversation: &str, reply: &str, instruction: &str) -> String {
    format!("{conversation}{ROUND_MARK}{reply}\n\n{instruction}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_slots_fill() {
        let s = INTENTION.render(&[
            ("guide", "G"),
            ("orders", "Alice Soup"),
            ("prior", "None"),
            ("message", "Chop it"),
        ]);
        assert!(s.contains("Current soup orders: Alice Soup"));
        assert!(!s.contains("{{"));
        assert!(s.ends_with("Now, your answer is:"));
    }

    #[test]
    fn prefix_keeps_trailing_space() {
        let s = FAST_MIND.render(&[("guide", "G"), ("condition", "C"), ("history", "")]);
        assert!(s.ends_with("My actions are: "));
    }

    #[test]
    fn digests_are_distinct() {
        let mut d: Vec<_> = ALL.iter().map(|t| t.digest()).collect();
        d.sort();
        d.dedup();
        assert_eq!(d.len(), ALL.len());
    }
}
