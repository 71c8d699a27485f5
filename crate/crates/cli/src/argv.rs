//! The resolved command line stored in result files.
//!
//! Tokens are joined by single spaces; `%`, whitespace and control
//! characters inside a token are percent-encoded.

pub fn encode(tokens: &[String]) -> String {
    tokens.iter().map(|t| encode_token(t)).collect::<Vec<_>>().join(" ")
}

fn encode_token(token: &str) -> String {
    if token.is_empty() {
        return "%".to_string();
    }
    let mut out = String::with_capacity(token.len());
    for c in token.chars() {
        if c == '%' || c.is_whitespace() || c.is_control() {
            let mut buf = [0u8; 4];
            for b in c.encode_utf8(&mut buf).bytes() {
                out.push_str(&format!("%{b:02X}"));
            }
        } else {
            out.push(c);
        }
    }
    out
}

pub fn decode(line: &str) -> Option<Vec<String>> {
    line.split(' ').filter(|t| !t.is_empty()).map(decode_token).collect()
}

fn decode_token(token: &str) -> Option<String> {
    if token == "%" {
        return Some(String::new());
    }
    let bytes = token.as_bytes();
    let mut out = Vec::with_capacity(bytes.len());
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'%' {
            let hex = token.get(i + 1..i + 3)?;
            out.push(u8::from_str_radix(hex, 16).ok()?);
            i += 3;
        } else {
            out.push(bytes[i]);
            i += 1;
        }
    }
    String::from_utf8(out).ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let tokens: Vec<String> =
            ["simulate", "--events", "/tmp/my data/e 1.csv", "", "100%", "tab\there", "é"].iter().map(|s| s.to_string()).collect();
        let line = encode(&tokens);
        assert!(!line.contains('\t'));
        assert_eq!(decode(&line).unwrap(), tokens);
    }

    #[test]
    fn bad_escape() {
        assert_eq!(decode("a %Z1"), None);
        assert_eq!(decode("a %4"), None);
    }
}
