use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use super::{line_of, InputError};
use crate::model::ItemType;

fn column(headers: &csv::StringRecord, name: &str) -> Result<usize, InputError> {
    headers.iter().position(|h| h.trim() == name).ok_or_else(|| InputError::MissingColumn(name.to_string()))
}

fn parse_u32(record: &csv::StringRecord, idx: usize, what: &str) -> Result<u32, InputError> {
    let raw = record.get(idx).unwrap_or("").trim();
    raw.parse().map_err(|_| InputError::Malformed { line: line_of(record), msg: format!("{what} `{raw}` is not a non-negative integer") })
}

/// Reads `catalog,section,slot,capacity` rows into item types with dense ids in file order.
pub fn read_schedule(reader: impl Read) -> Result<Vec<ItemType>, InputError> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let (c, s, sl, cap) =
        (column(&headers, "catalog")?, column(&headers, "section")?, column(&headers, "slot")?, column(&headers, "capacity")?);
    let mut items = Vec::new();
    let mut seen = BTreeSet::new();
    for record in rdr.records() {
        let record = record?;
        let line = line_of(&record);
        if record.len() < headers.len() {
            return Err(InputError::Malformed { line, msg: format!("expected {} fields, found {}", headers.len(), record.len()) });
        }
        let catalog = record[c].trim().to_string();
        let section = record[s].trim().to_string();
        if catalog.is_empty() {
            return Err(InputError::Malformed { line, msg: "empty catalog number".into() });
        }
        let slot = parse_u32(&record, sl, "slot")?;
        let capacity = parse_u32(&record, cap, "capacity")?;
        if capacity == 0 {
            return Err(InputError::ZeroCapacity { line });
        }
        let item = ItemType::new(items.len(), catalog, section, slot, capacity);
        if !seen.insert(item.key()) {
            return Err(InputError::DuplicateCourse { line, key: item.key() });
        }
        items.push(item);
    }
    Ok(items)
}

pub fn load_schedule(path: &Path) -> Result<Vec<ItemType>, InputError> {
    let file = File::open(path).map_err(|source| InputError::File { path: path.to_path_buf(), source })?;
    read_schedule(file)
}

pub fn write_schedule(items: &[ItemType], writer: impl Write) -> Result<(), InputError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["catalog", "section", "slot", "capacity"])?;
    for g in items {
        w.write_record([g.catalog.clone(), g.section.clone(), g.slot.to_string(), g.capacity.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Converts `catalog,section,meeting,capacity` rows into schedule rows.
/// Meeting patterns are grouped by exact string equality and numbered in
/// order of first appearance.
pub fn resolve_slots(reader: impl Read, writer: impl Write) -> Result<usize, InputError> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr.headers()?.clone();
    let (c, s, mt, cap) =
        (column(&headers, "catalog")?, column(&headers, "section")?, column(&headers, "meeting")?, column(&headers, "capacity")?);
    let mut slots: BTreeMap<String, usize> = BTreeMap::new();
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["catalog", "section", "slot", "capacity"])?;
    for record in rdr.records() {
        let record = record?;
        let next = slots.len();
        let slot = *slots.entry(record[mt].trim().to_string()).or_insert(next);
        w.write_record([record[c].trim(), record[s].trim(), &slot.to_string(), record[cap].trim()])?;
    }
    w.flush()?;
    Ok(slots.len())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_row() {
        let items = read_schedule("catalog,section,slot,capacity\nCS 101,01,3,40\n".as_bytes()).unwrap();
        assert_eq!(items, vec![ItemType::new(0, "CS 101", "01", 3, 40)]);
    }

    #[test]
    fn columns_in_any_order() {
        let items = read_schedule("capacity,slot,section,catalog\n5,1,02,CS 220\n".as_bytes()).unwrap();
        assert_eq!(items[0].key(), "CS 220_02");
        assert_eq!((items[0].slot, items[0].capacity), (1, 5));
    }

    #[test]
    fn rejects_bad_rows() {
        let zero = read_schedule("catalog,section,slot,capacity\nA,1,0,3\nB,1,0,0\n".as_bytes());
        assert!(matches!(zero, Err(InputError::ZeroCapacity { line: 3 })));
        let dup = read_schedule("catalog,section,slot,capacity\nA,1,0,3\nA,1,2,4\n".as_bytes());
        assert!(matches!(dup, Err(InputError::DuplicateCourse { line: 3, .. })));
        let junk = read_schedule("catalog,section,slot,capacity\nA,1,x,3\n".as_bytes());
        assert!(matches!(junk, Err(InputError::Malformed { line: 2, .. })));
        let short = read_schedule("catalog,section,slot,capacity\nA,1,0\n".as_bytes());
        assert!(matches!(short, Err(InputError::Malformed { line: 2, .. })));
        let missing = read_schedule("catalog,section,capacity\nA,1,3\n".as_bytes());
        assert!(matches!(missing, Err(InputError::MissingColumn(c)) if c == "slot"));
    }

    #[test]
    fn round_trip() {
        let items = vec![ItemType::new(0, "CS 101", "01", 0, 10), ItemType::new(1, "CS 101", "02", 4, 12)];
        let mut buf = Vec::new();
        write_schedule(&items, &mut buf).unwrap();
        assert_eq!(read_schedule(buf.as_slice()).unwrap(), items);
    }

    #[test]
    fn meeting_patterns_become_slots() {
        let input = "catalog,section,meeting,capacity\n\
A,01,Tue/Thu 13:00-14:15,30\n\
B,01,Mon/Wed 09:00-10:15,20\n\
C,01,Tue/Thu 13:00-14:15,25\n";
        let mut out = Vec::new();
        assert_eq!(resolve_slots(input.as_bytes(), &mut out).unwrap(), 2);
        let items = read_schedule(out.as_slice()).unwrap();
        assert_eq!(items.iter().map(|g| g.slot).collect::<Vec<_>>(), vec![0, 1, 0]);
    }
}
