//! HTML variants with layout-forcing or texture declarations removed.
//!
//! Inline `style` attributes and `<style>` sheets are rewritten; every
//! declaration that is not targeted is kept byte-for-byte.

use std::cell::RefCell;
use std::rc::Rc;

use lol_html::html_content::ContentType;
use lol_html::{element, rewrite_str, text, RewriteStrSettings};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sanitized {
    pub html: String,
    pub warnings: Vec<String>,
}

/// What to do with one declaration.
enum Verdict {
    Keep,
    Drop,
    Replace(String),
}

type Rule = fn(&str, &str) -> Verdict;

fn aspect_rule(prop: &str, value: &str) -> Verdict {
    let v = value.to_ascii_lowercase();
    match prop {
        "min-height" => Verdict::Drop,
        "overflow" | "overflow-y" if v.contains("hidden") || v.contains("clip") => Verdict::Drop,
        _ => Verdict::Keep,
    }
}

fn whitespace_rule(prop: &str, value: &str) -> Verdict {
    match prop {
        "background-image" => Verdict::Drop,
        "background" => {
            let stripped = strip_image_tokens(value);
            if stripped == value {
                Verdict::Keep
            } else if stripped.trim().trim_matches(',').trim().is_empty() {
                Verdict::Drop
            } else {
                Verdict::Replace(stripped)
            }
        }
        _ => Verdict::Keep,
    }
}

/// Removes pixels from the `min-height` / `overflow: hidden` family so the page
/// can grow to its natural height.
pub fn sanitize_for_aspect(html: &str) -> Sanitized {
    rewrite(html, aspect_rule, false)
}

/// Removes background images (declarations, shorthand `url()`/gradient layers
/// and the legacy `background` attribute).
pub fn sanitize_for_whitespace(html: &str) -> Sanitized {
    rewrite(html, whitespace_rule, true)
}

fn rewrite(html: &str, rule: Rule, strip_bg_attr: bool) -> Sanitized {
    let warnings = Rc::new(RefCell::new(Vec::<String>::new()));
    let sheet = Rc::new(RefCell::new(String::new()));
    let (w1, w2) = (warnings.clone(), warnings.clone());
    let buf = sheet.clone();

    let mut handlers = vec![
        element!("[style]", move |el| {
            if let Some(style) = el.get_attribute("style") {
                if let Some(out) = filter_declarations(&style, rule) {
                    el.set_attribute("style", &out)?;
                } else {
                    w1.borrow_mut().push(format!("unbalanced inline style left intact: {style:.60}"));
                }
            }
            Ok(())
        }),
        text!("style", move |t| {
            buf.borrow_mut().push_str(t.as_str());
            if t.last_in_text_node() {
                let css = std::mem::take(&mut *buf.borrow_mut());
                match filter_stylesheet(&css, rule) {
                    Some(out) => t.replace(&out, ContentType::Html),
                    None => {
                        w2.borrow_mut().push("unparseable <style> block left intact".into());
                        t.replace(&css, ContentType::Html);
                    }
                }
            } else {
                t.remove();
            }
            Ok(())
        }),
    ];
    if strip_bg_attr {
        handlers.push(element!("[background]", |el| {
            el.remove_attribute("background");
            Ok(())
        }));
    }

    let settings = RewriteStrSettings { element_content_handlers: handlers, ..RewriteStrSettings::new() };
    match rewrite_str(html, settings) {
        Ok(out) => Sanitized { html: out, warnings: warnings.take() },
        Err(e) => Sanitized { html: html.to_string(), warnings: vec![format!("html rewrite failed, input left intact: {e}")] },
    }
}

/// Strips `url(...)` and `*gradient(...)` function tokens from a value.
fn strip_image_tokens(value: &str) -> String {
    let lower = value.to_ascii_lowercase();
    let bytes = value.as_bytes();
    let mut out = String::with_capacity(value.len());
    let mut i = 0;
    while i < bytes.len() {
        let rest = &lower[i..];
        let fname_len = if rest.starts_with("url(") {
            Some(3)
        } else {
            gradient_name_len(rest)
        };
        let at_word_start = i == 0 || !is_ident_byte(bytes[i - 1]);
        if let (Some(n), true) = (fname_len, at_word_start) {
            if let Some(end) = matching_paren(value, i + n) {
                i = end + 1;
                continue;
            }
        }
        let ch = value[i..].chars().next().expect("in bounds");
        out.push(ch);
        i += ch.len_utf8();
    }
    out
}

fn is_ident_byte(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'-' || b == b'_'
}

fn gradient_name_len(rest: &str) -> Option<usize> {
    let ident_len = rest.bytes().take_while(|b| is_ident_byte(*b)).count();
    let ident = &rest[..ident_len];
    (ident.ends_with("gradient") && rest[ident_len..].starts_with('(')).then_some(ident_len)
}

/// Index of the `)` matching the `(` at `open`, honoring strings.
fn matching_paren(s: &str, open: usize) -> Option<usize> {
    let b = s.as_bytes();
    if b.get(open) != Some(&b'(') {
        return None;
    }
    let mut depth = 0;
    let mut i = open;
    while i < b.len() {
        match b[i] {
            b'"' | b'\'' => i = skip_string(b, i)?,
            b'(' => depth += 1,
            b')' => {
                depth -= 1;
                if depth == 0 {
                    return Some(i);
                }
            }
            _ => {}
        }
        i += 1;
    }
    None
}

/// Position of the closing quote of the string starting at `i`.
fn skip_string(b: &[u8], i: usize) -> Option<usize> {
    let q = b[i];
    let mut j = i + 1;
    while j < b.len() {
        match b[j] {
            b'\\' => j += 1,
            c if c == q => return Some(j),
            _ => {}
        }
        j += 1;
    }
    None
}

/// Position just past the `*/` of the comment starting at `i`.
fn skip_comment(b: &[u8], i: usize) -> Option<usize> {
    let mut j = i + 2;
    while j + 1 < b.len() {
        if b[j] == b'*' && b[j + 1] == b'/' {
            return Some(j + 2);
        }
        j += 1;
    }
    None
}

#[derive(Debug)]
enum Item<'a> {
    /// Text up to (excluding) a top-level `;` or the end.
    Decl(&'a str, bool),
    /// `prelude { body }`.
    Block { prelude: &'a str, body: &'a str },
}

/// Splits a declaration list or rule list into top-level items.
fn scan(s: &str) -> Option<Vec<Item<'_>>> {
    let b = s.as_bytes();
    let mut items = Vec::new();
    let mut start = 0;
    let mut i = 0;
    let mut parens = 0i32;
    while i < b.len() {
        match b[i] {
            b'"' | b'\'' => i = skip_string(b, i)?,
            b'/' if b.get(i + 1) == Some(&b'*') => {
                i = skip_comment(b, i)?;
                continue;
            }
            b'(' => parens += 1,
            b')' => parens -= 1,
            b';' if parens == 0 => {
                items.push(Item::Decl(&s[start..i], true));
                start = i + 1;
            }
            b'{' if parens == 0 => {
                let close = matching_brace(b, i)?;
                items.push(Item::Block { prelude: &s[start..i], body: &s[i + 1..close] });
                start = close + 1;
                i = close;
            }
            b'}' => return None,
            _ => {}
        }
        i += 1;
    }
    if parens != 0 {
        return None;
    }
    items.push(Item::Decl(&s[start..], false));
    Some(items)
}

fn matching_brace(b: &[u8], open: usize) -> Option<usize> {
    let mut depth = 0;
    let mut i = open;
    while i < b.len() {
        match b[i] {
            b'"' | b'\'' => i = skip_string(b, i)?,
            b'/' if b.get(i + 1) == Some(&b'*') => {
                i = skip_comment(b, i)?;
                continue;
            }
            b'{' => depth += 1,
            b'}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(i);
                }
            }
            _ => {}
        }
        i += 1;
    }
    None
}

fn strip_comments(s: &str) -> String {
    let b = s.as_bytes();
    let mut out = String::new();
    let mut i = 0;
    while i < b.len() {
        if b[i] == b'/' && b.get(i + 1) == Some(&b'*') {
            i = skip_comment(b, i).unwrap_or(b.len());
            continue;
        }
        let ch = s[i..].chars().next().expect("in bounds");
        out.push(ch);
        i += ch.len_utf8();
    }
    out
}

fn apply_rule(decl: &str, rule: Rule) -> Verdict {
    let Some(colon) = decl.find(':') else { return Verdict::Keep };
    let prop = strip_comments(&decl[..colon]).trim().to_ascii_lowercase();
    let value = &decl[colon + 1..];
    match rule(&prop, value) {
        Verdict::Replace(v) => Verdict::Replace(format!("{}:{}", &decl[..colon], v)),
        other => other,
    }
}

/// Filters a declaration list (inline style or rule body). `None` when it
/// cannot be split reliably.
fn filter_declarations(s: &str, rule: Rule) -> Option<String> {
    let items = scan(s)?;
    let mut parts: Vec<String> = Vec::new();
    let mut changed = false;
    for item in items {
        match item {
            Item::Decl(text, _) => match apply_rule(text, rule) {
                Verdict::Keep => parts.push(text.to_string()),
                Verdict::Drop => changed = true,
                Verdict::Replace(t) => {
                    changed = true;
                    parts.push(t);
                }
            },
            // Nested rule inside a declaration block.
            Item::Block { prelude, body } => {
                let inner = filter_declarations(body, rule)?;
                changed |= inner != body;
                // Blocks are not `;`-terminated; glue them onto the next part.
                parts.push(format!("{prelude}{{{inner}}}\u{0}"));
            }
        }
    }
    if !changed {
        return Some(s.to_string());
    }
    let mut out = String::with_capacity(s.len());
    let mut glue = false;
    for (i, p) in parts.iter().enumerate() {
        if i > 0 && !glue {
            out.push(';');
        }
        match p.strip_suffix('\u{0}') {
            Some(block) => {
                out.push_str(block);
                glue = true;
            }
            None => {
                out.push_str(p);
                glue = false;
            }
        }
    }
    Some(out)
}

const NESTED_AT_RULES: &[&str] = &["@media", "@supports", "@document", "@layer", "@container", "@scope", "@starting-style"];

/// Filters a full stylesheet. `None` when the sheet is unbalanced.
fn filter_stylesheet(css: &str, rule: Rule) -> Option<String> {
    let items = scan(css)?;
    let mut changed = false;
    let mut out = String::with_capacity(css.len());
    for item in items {
        match item {
            Item::Decl(text, terminated) => {
                out.push_str(text);
                if terminated {
                    out.push(';');
                }
            }
            Item::Block { prelude, body } => {
                let head = strip_comments(prelude).trim_start().to_ascii_lowercase();
                let nested = NESTED_AT_RULES.iter().any(|a| head.starts_with(a)) || head.starts_with("@keyframes") || head.starts_with("@-webkit-keyframes");
                let inner = if nested { filter_stylesheet(body, rule)? } else { filter_declarations(body, rule)? };
                changed |= inner != body;
                out.push_str(prelude);
                out.push('{');
                out.push_str(&inner);
                out.push('}');
            }
        }
    }
    Some(if changed { out } else { css.to_string() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inline_min_height_removed() {
        let s = sanitize_for_aspect(r#"<div style="min-height:720px;color:red">x</div>"#);
        assert_eq!(s.html, r#"<div style="color:red">x</div>"#);
        assert!(s.warnings.is_empty());
    }

    #[test]
    fn style_block_overflow_removed() {
        let s = sanitize_for_aspect("<style>.s{overflow:hidden;padding:4px}</style>");
        assert_eq!(s.html, "<style>.s{padding:4px}</style>");
    }

    #[test]
    fn overflow_x_and_visible_are_kept() {
        let html = "<style>.a{overflow-x:hidden}.b{overflow:visible}</style>";
        assert_eq!(sanitize_for_aspect(html).html, html);
    }

    #[test]
    fn media_queries_and_comments() {
        let html = "<style>/* a{min-height:1px} */@media screen{.a{MIN-HEIGHT : 10px ; color: blue}}</style>";
        assert_eq!(
            sanitize_for_aspect(html).html,
            "<style>/* a{min-height:1px} */@media screen{.a{ color: blue}}</style>"
        );
    }

    #[test]
    fn strings_with_braces_do_not_confuse_the_scanner() {
        let html = r#"<style>.a::before{content:"}{;";min-height:5px}</style>"#;
        assert_eq!(sanitize_for_aspect(html).html, r#"<style>.a::before{content:"}{;"}</style>"#);
    }

    #[test]
    fn unbalanced_sheet_left_intact_with_warning() {
        let html = "<style>.a{min-height:5px</style>";
        let s = sanitize_for_aspect(html);
        assert_eq!(s.html, html);
        assert_eq!(s.warnings.len(), 1);
    }

    #[test]
    fn background_image_removed() {
        let s = sanitize_for_whitespace(r#"<body style="background-image:url(tex.png);margin:0">"#);
        assert_eq!(s.html, r#"<body style="margin:0">"#);
    }

    #[test]
    fn background_shorthand_keeps_color() {
        let s = sanitize_for_whitespace("<style>body{background:#fafafa url('a(1).png') repeat}</style>");
        assert_eq!(s.html, "<style>body{background:#fafafa  repeat}</style>");
        let s = sanitize_for_whitespace("<style>p{background: linear-gradient(red, rgb(0,0,0))}</style>");
        assert_eq!(s.html, "<style>p{}</style>");
    }

    #[test]
    fn legacy_background_attribute_removed() {
        let s = sanitize_for_whitespace(r#"<body background="noise.png"><p>x</p></body>"#);
        assert_eq!(s.html, "<body><p>x</p></body>");
    }

    #[test]
    fn untouched_html_is_identical() {
        let html = "<html><head><style>.a{color:red}</style></head><body><p style=\"margin:0\">hi</p></body></html>";
        assert_eq!(sanitize_for_aspect(html).html, html);
        assert_eq!(sanitize_for_whitespace(html).html, html);
    }

    #[test]
    fn nested_rules_inside_blocks() {
        let html = "<style>.a{color:red;&:hover{min-height:3px;color:blue}margin:0}</style>";
        assert_eq!(sanitize_for_aspect(html).html, "<style>.a{color:red;&:hover{color:blue}margin:0}</style>");
    }
}
