import json
import logging
from pathlib import Path

from rest_framework import serializers

from toolchain.serializers import PpaRefFieldsMixin, TestbenchFieldsMixin, text_field

from .records import STATISTICAL, BaseRecord, ColdStartRecord, PairedRecord, Rejection, RlRecord

logger = logging.getLogger(__name__)


class BaseRecordSerializer(serializers.Serializer):
    """
    Serializer for <instruction, Verilog> records
    """
    id = serializers.CharField(max_length=64)
    instruction = text_field()
    code = text_field()

    def create(self, validated_data):
        return BaseRecord(**validated_data)


class ColdStartRecordSerializer(BaseRecordSerializer):
    """
    Serializer for reasoning-annotated records
    """
    reasoning = text_field()

    def validate_reasoning(self, value):
        if not value.strip():
            raise serializers.ValidationError("reasoning must not be empty")
        return value

    def create(self, validated_data):
        return ColdStartRecord(**validated_data)


class PairedRecordSerializer(TestbenchFieldsMixin, BaseRecordSerializer):
    """
    Serializer for records carrying a validated testbench
    """

    def validate(self, attrs):
        return self.validate_testbench_attrs(attrs)

    def create(self, validated_data):
        return PairedRecord(**validated_data)


class RlRecordSerializer(PpaRefFieldsMixin, TestbenchFieldsMixin, serializers.Serializer):
    """
    Serializer for <instruction, testbench, reference_ppa> training records
    """
    id = serializers.CharField(max_length=64)
    instruction = text_field()
    code = text_field(required=False, allow_null=True)
    validation_level = serializers.CharField(required=False, default=STATISTICAL)

    def validate(self, attrs):
        attrs = self.validate_ppa_attrs(self.validate_testbench_attrs(attrs))
        if 'reference_ppa' not in attrs:
            raise serializers.ValidationError("ppa_ref is required")
        low, high = self.context.get('case_bounds', (3, 20))
        if not low <= attrs['testbench'].case_count() <= high:
            raise serializers.ValidationError({'testbench': f"testbench must hold between {low} and {high} cases"})
        return attrs

    def create(self, validated_data):
        return RlRecord(**validated_data)


class RejectionSerializer(serializers.Serializer):
    source = serializers.CharField()
    stage = serializers.CharField()
    reason = serializers.CharField()
    detail = serializers.CharField(allow_blank=True, trim_whitespace=False)

    def create(self, validated_data):
        return Rejection(**validated_data)


def dump_records(records, path, serializer_class):
    """One JSON object per line, keys sorted, in the order given."""
    with Path(path).open('w') as handle:
        for record in records:
            handle.write(json.dumps(serializer_class(record).data, sort_keys=True) + '\n')
    logger.info(f"wrote {len(records)} records to {path}")


def load_records(path, serializer_class, context=None):
    records = []
    with Path(path).open() as handle:
        for number, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                data = json.loads(line)
            except json.JSONDecodeError as exc:
                raise serializers.ValidationError({'line': number, 'detail': str(exc)}) from None
            serializer = serializer_class(data=data, context=context or {})
            if not serializer.is_valid():
                raise serializers.ValidationError({'line': number, 'errors': serializer.errors})
            records.append(serializer.save())
    return records
