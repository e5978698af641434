//! A small, tolerant HTML lexer and element tree.
//!
//! It only understands what archive exports need: start/end tags, quoted and
//! unquoted attributes, comments, and raw-text elements. Every attribute value
//! keeps its byte span in the source so links can be rewritten in place with
//! all other bytes untouched. It never panics and never fails: any byte string
//! produces some (possibly empty) token stream.

use std::borrow::Cow;
use std::ops::Range;

#[derive(Debug, Clone)]
pub(crate) struct Attr {
    pub name: String,
    /// Span of the value inside the quotes, if the attribute has a value.
    pub value: Option<Range<usize>>,
}

#[derive(Debug, Clone)]
pub(crate) struct Tag {
    pub name: String,
    pub attrs: Vec<Attr>,
    pub span: Range<usize>,
    pub self_closing: bool,
}

#[derive(Debug, Clone)]
pub(crate) enum Token {
    Start(Tag),
    End { name: String, span: Range<usize> },
    Text(Range<usize>),
}

const VOID: &[&str] = &[
    "area", "base", "br", "col", "embed", "hr", "img", "input", "link", "meta", "param", "source",
    "track", "wbr",
];
const RAW_TEXT: &[&str] = &["script", "style"];

fn find(hay: &[u8], from: usize, needle: &[u8]) -> Option<usize> {
    if from >= hay.len() {
        return None;
    }
    hay[from..]
        .windows(needle.len())
        .position(|w| w == needle)
        .map(|p| p + from)
}

fn find_ci(hay: &[u8], from: usize, needle: &[u8]) -> Option<usize> {
    if from >= hay.len() {
        return None;
    }
    hay[from..]
        .windows(needle.len())
        .position(|w| w.eq_ignore_ascii_case(needle))
        .map(|p| p + from)
}

fn is_ws(b: u8) -> bool {
    matches!(b, b' ' | b'\t' | b'\n' | b'\r' | b'\x0c')
}

pub(crate) fn tokenize(src: &[u8]) -> Vec<Token> {
    let mut out = Vec::new();
    let len = src.len();
    let mut pos = 0;
    let mut text_start = 0;

    let flush = |out: &mut Vec<Token>, from: usize, to: usize| {
        if to > from {
            out.push(Token::Text(from..to));
        }
    };

    while pos < len {
        if src[pos] != b'<' {
            pos += 1;
            continue;
        }
        let lt = pos;
        let next = src.get(lt + 1).copied();
        match next {
            Some(b'!') if src[lt..].starts_with(b"<!--") => {
                flush(&mut out, text_start, lt);
                let end = find(src, lt + 4, b"-->").map_or(len, |e| e + 3);
                pos = end;
                text_start = end;
            }
            Some(b'!') | Some(b'?') => {
                flush(&mut out, text_start, lt);
                let end = find(src, lt + 1, b">").map_or(len, |e| e + 1);
                pos = end;
                text_start = end;
            }
            Some(b'/') => {
                let name_start = lt + 2;
                let mut i = name_start;
                while i < len && (src[i].is_ascii_alphanumeric() || src[i] == b'-' || src[i] == b':')
                {
                    i += 1;
                }
                if i == name_start {
                    // "</" not followed by a name: literal text.
                    pos = lt + 1;
                    continue;
                }
                flush(&mut out, text_start, lt);
                let name = String::from_utf8_lossy(&src[name_start..i]).to_ascii_lowercase();
                let end = find(src, i, b">").map_or(len, |e| e + 1);
                out.push(Token::End {
                    name,
                    span: lt..end,
                });
                pos = end;
                text_start = end;
            }
            Some(c) if c.is_ascii_alphabetic() => {
                flush(&mut out, text_start, lt);
                let (tag, end) = lex_start_tag(src, lt);
                let raw = RAW_TEXT.contains(&tag.name.as_str()) && !tag.self_closing;
                let name = tag.name.clone();
                out.push(Token::Start(tag));
                pos = end;
                text_start = end;
                if raw {
                    let mut closer = b"</".to_vec();
                    closer.extend_from_slice(name.as_bytes());
                    let body_end = find_ci(src, end, &closer).unwrap_or(len);
                    flush(&mut out, end, body_end);
                    pos = body_end;
                    text_start = body_end;
                    if body_end < len {
                        let close_end = find(src, body_end, b">").map_or(len, |e| e + 1);
                        out.push(Token::End {
                            name,
                            span: body_end..close_end,
                        });
                        pos = close_end;
                        text_start = close_end;
                    }
                }
            }
            _ => {
                pos = lt + 1;
            }
        }
    }
    flush(&mut out, text_start, len);
    out
}

fn lex_start_tag(src: &[u8], lt: usize) -> (Tag, usize) {
    let len = src.len();
    let mut i = lt + 1;
    let name_start = i;
    while i < len && !is_ws(src[i]) && src[i] != b'>' && src[i] != b'/' {
        i += 1;
    }
    let name = String::from_utf8_lossy(&src[name_start..i]).to_ascii_lowercase();
    let mut attrs = Vec::new();
    let mut self_closing = false;
    loop {
        while i < len && is_ws(src[i]) {
            i += 1;
        }
        if i >= len {
            break;
        }
        match src[i] {
            b'>' => {
                i += 1;
                return (
                    Tag {
                        name,
                        attrs,
                        span: lt..i,
                        self_closing,
                    },
                    i,
                );
            }
            b'/' => {
                self_closing = true;
                i += 1;
                continue;
            }
            _ => {}
        }
        self_closing = false;
        let an_start = i;
        while i < len && !is_ws(src[i]) && !matches!(src[i], b'=' | b'>' | b'/') {
            i += 1;
        }
        if i == an_start {
            // A lone '=' or similar junk.
            i += 1;
            continue;
        }
        let attr_name = String::from_utf8_lossy(&src[an_start..i]).to_ascii_lowercase();
        let mut j = i;
        while j < len && is_ws(src[j]) {
            j += 1;
        }
        if j < len && src[j] == b'=' {
            j += 1;
            while j < len && is_ws(src[j]) {
                j += 1;
            }
            let value = if j < len && (src[j] == b'"' || src[j] == b'\'') {
                let q = src[j];
                let v_start = j + 1;
                let v_end = src[v_start..]
                    .iter()
                    .position(|&b| b == q)
                    .map_or(len, |p| p + v_start);
                i = (v_end + 1).min(len);
                v_start..v_end
            } else {
                let v_start = j;
                while j < len && !is_ws(src[j]) && src[j] != b'>' {
                    j += 1;
                }
                i = j;
                v_start..j
            };
            attrs.push(Attr {
                name: attr_name,
                value: Some(value),
            });
        } else {
            attrs.push(Attr {
                name: attr_name,
                value: None,
            });
        }
    }
    (
        Tag {
            name,
            attrs,
            span: lt..len,
            self_closing,
        },
        len,
    )
}

/// Lossy UTF-8 view of a byte span with HTML character references decoded.
pub(crate) fn decoded(src: &[u8], span: Range<usize>) -> String {
    let raw = String::from_utf8_lossy(&src[span]);
    match html_escape::decode_html_entities(&raw) {
        Cow::Borrowed(_) => raw.into_owned(),
        Cow::Owned(s) => s,
    }
}

#[derive(Debug, Clone)]
pub(crate) enum Node {
    Element(usize),
    Text(Range<usize>),
}

#[derive(Debug, Clone)]
pub(crate) struct Element {
    pub name: String,
    pub attrs: Vec<Attr>,
    /// From the start of the opening tag to the end of the closing tag (or
    /// wherever the element was implicitly closed).
    pub outer: Range<usize>,
    pub children: Vec<Node>,
}

/// Element tree over a borrowed document.
pub(crate) struct Document<'a> {
    pub src: &'a [u8],
    pub elements: Vec<Element>,
    pub roots: Vec<Node>,
}

impl<'a> Document<'a> {
    pub fn parse(src: &'a [u8]) -> Self {
        let mut elements: Vec<Element> = Vec::new();
        let mut roots = Vec::new();
        let mut stack: Vec<usize> = Vec::new();

        fn attach(elements: &mut [Element], roots: &mut Vec<Node>, stack: &[usize], node: Node) {
            match stack.last() {
                Some(&p) => elements[p].children.push(node),
                None => roots.push(node),
            }
        }

        for tok in tokenize(src) {
            match tok {
                Token::Start(tag) => {
                    let idx = elements.len();
                    let void = tag.self_closing || VOID.contains(&tag.name.as_str());
                    elements.push(Element {
                        name: tag.name,
                        attrs: tag.attrs,
                        outer: tag.span.start..tag.span.end,
                        children: Vec::new(),
                    });
                    attach(&mut elements, &mut roots, &stack, Node::Element(idx));
                    if !void {
                        stack.push(idx);
                    }
                }
                Token::End { name, span } => {
                    if let Some(depth) = stack.iter().rposition(|&e| elements[e].name == name) {
                        for &open in &stack[depth + 1..] {
                            elements[open].outer.end = span.start;
                        }
                        elements[stack[depth]].outer.end = span.end;
                        stack.truncate(depth);
                    }
                }
                Token::Text(r) => attach(&mut elements, &mut roots, &stack, Node::Text(r)),
            }
        }
        for &open in &stack {
            elements[open].outer.end = src.len();
        }
        Document {
            src,
            elements,
            roots,
        }
    }

    pub fn attr(&self, el: usize, name: &str) -> Option<String> {
        self.elements[el]
            .attrs
            .iter()
            .find(|a| a.name == name)
            .map(|a| a.value.clone().map_or_else(String::new, |v| decoded(self.src, v)))
    }

    pub fn has_class(&self, el: usize, class: &str) -> bool {
        self.attr(el, "class")
            .is_some_and(|c| c.split_ascii_whitespace().any(|c| c == class))
    }

    /// All elements in document order.
    pub fn preorder(&self) -> Vec<usize> {
        let mut out = Vec::new();
        self.walk(&self.roots, &mut out);
        out
    }

    fn walk(&self, nodes: &[Node], out: &mut Vec<usize>) {
        for n in nodes {
            if let Node::Element(e) = n {
                out.push(*e);
                self.walk(&self.elements[*e].children, out);
            }
        }
    }

    /// First descendant (excluding `el` itself) matching a predicate, in
    /// document order.
    pub fn find_descendant(&self, el: usize, pred: &dyn Fn(usize) -> bool) -> Option<usize> {
        let mut out = Vec::new();
        self.walk(&self.elements[el].children, &mut out);
        out.into_iter().find(|&e| pred(e))
    }

    /// Text content with `<br>` as newline, skipping scripts and styles.
    pub fn text(&self, el: usize) -> String {
        let mut s = String::new();
        self.collect_text(el, &mut s);
        s
    }

    fn collect_text(&self, el: usize, out: &mut String) {
        for child in &self.elements[el].children {
            match child {
                Node::Text(r) => out.push_str(&decoded(self.src, r.clone())),
                Node::Element(c) => match self.elements[*c].name.as_str() {
                    "br" => out.push('\n'),
                    "script" | "style" => {}
                    _ => self.collect_text(*c, out),
                },
            }
        }
    }

    /// Only the text nodes that are direct children of `el`.
    pub fn own_text(&self, el: usize) -> String {
        self.elements[el]
            .children
            .iter()
            .filter_map(|c| match c {
                Node::Text(r) => Some(decoded(self.src, r.clone())),
                Node::Element(_) => None,
            })
            .collect()
    }
}
