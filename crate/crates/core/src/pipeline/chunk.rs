//! Paragraph-aligned splitting for inputs larger than one prompt.

pub const DEFAULT_CHUNK_BUDGET: usize = 24_000;

fn paragraphs(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    let mut end = 0;
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        if line.trim().is_empty() {
            if let Some(s) = start.take() {
                out.push(&text[s..end]);
            }
        } else {
            start.get_or_insert(offset + (line.len() - line.trim_start().len()));
            end = offset + line.trim_end().len();
        }
        offset += line.len();
    }
    if let Some(s) = start {
        out.push(&text[s..end]);
    }
    out
}

/// Splits a paragraph that alone exceeds `budget`: at line breaks first,
/// then at whitespace, then at a char boundary.
fn split_long(paragraph: &str, budget: usize) -> Vec<String> {
    let mut pieces = Vec::new();
    let mut rest = paragraph.trim();
    while rest.len() > budget {
        let mut cut = budget;
        while !rest.is_char_boundary(cut) {
            cut -= 1;
        }
        if cut == 0 {
            cut = rest.chars().next().map_or(1, char::len_utf8);
        }
        let head = &rest[..cut];
        let at = head
            .rfind('\n')
            .or_else(|| head.rfind(char::is_whitespace))
            .filter(|&i| i > 0)
            .unwrap_or(cut);
        pieces.push(rest[..at].trim().to_string());
        rest = rest[at..].trim_start();
    }
    if !rest.trim().is_empty() {
        pieces.push(rest.trim().to_string());
    }
    pieces.retain(|p| !p.is_empty());
    pieces
}

/// Greedily packs whole paragraphs into chunks of at most `budget` bytes.
/// Text that fits is returned as a single chunk, unchanged.
pub fn split_into_chunks(text: &str, budget: usize) -> Vec<String> {
    let budget = budget.max(1);
    if text.len() <= budget {
        return vec![text.to_string()];
    }
    let mut chunks = Vec::new();
    let mut current = String::new();
    for paragraph in paragraphs(text) {
        let parts = if paragraph.len() > budget {
            split_long(paragraph, budget)
        } else {
            vec![paragraph.to_string()]
        };
        for part in parts {
            if !current.is_empty() && current.len() + 2 + part.len() > budget {
                chunks.push(std::mem::take(&mut current));
            }
            if !current.is_empty() {
                current.push_str("\n\n");
            }
            current.push_str(&part);
        }
    }
    if !current.is_empty() {
        chunks.push(current);
    }
    chunks
}

fn first_sentence(paragraph: &str) -> &str {
    let bytes = paragraph.as_bytes();
    for (i, c) in paragraph.char_indices() {
        if matches!(c, '.' | '!' | '?')
            && bytes.get(i + 1).is_none_or(|b| b.is_ascii_whitespace())
        {
            return &paragraph[..=i];
        }
    }
    paragraph
}

/// A non-model digest used as summary input when the source is too long:
/// the first sentence of each paragraph, truncated at a paragraph boundary
/// to fit `budget`.
pub fn extractive_digest(text: &str, budget: usize) -> String {
    if text.len() <= budget {
        return text.to_string();
    }
    let mut digest = String::new();
    for paragraph in paragraphs(text) {
        let sentence = first_sentence(paragraph);
        let sentence: String = sentence.split_whitespace().collect::<Vec<_>>().join(" ");
        if digest.len() + 2 + sentence.len() > budget {
            if digest.is_empty() {
                return split_long(&sentence, budget).swap_remove(0);
            }
            break;
        }
        if !digest.is_empty() {
            digest.push_str("\n\n");
        }
        digest.push_str(&sentence);
    }
    digest
}
